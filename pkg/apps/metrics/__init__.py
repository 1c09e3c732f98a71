"""Quality and rate metrics package."""
