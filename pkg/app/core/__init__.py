# Exceptions, logging and checked arithmetic
