"""Training stages, optimizer, schedules and data partitioning."""
