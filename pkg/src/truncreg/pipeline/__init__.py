"""Image I/O, degradation, metrics, run configuration and the command-line front end."""
