# Test package for bootdiff
