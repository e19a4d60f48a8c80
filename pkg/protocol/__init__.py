"""Executable coding scheme: hashing, shaping, compound source coding, lifting and SRM decoding."""
