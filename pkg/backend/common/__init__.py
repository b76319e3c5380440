"""
Shared configuration, schemas, errors and logging setup
"""
