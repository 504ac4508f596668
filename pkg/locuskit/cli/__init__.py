""" cli v0.3
Command-line surface: run configuration, data ingestion, task drivers and
artifact writers
"""
