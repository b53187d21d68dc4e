# Run configuration package
