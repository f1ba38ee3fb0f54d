"""Optimization and moment-reduction pipelines."""
