# Test package for LAGO
