"""Benchmark-neutral pricing under the minimal market model."""
