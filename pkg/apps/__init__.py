"""Raw image pipeline applications package."""
