"""Asset lookup and completion parsing helpers."""
