# Core solver package
