# Main package


