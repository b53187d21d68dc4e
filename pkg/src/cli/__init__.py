# Command-line driver package
