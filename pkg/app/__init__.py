# Bootdiff: bootstrap percolation difficulty toolkit
