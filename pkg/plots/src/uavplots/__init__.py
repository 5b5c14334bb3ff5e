"""Standalone figure rendering for uavnav run logs.

Consumes only the documented file formats (episodes.csv, trials.jsonl and
trajectory CSVs); never imports the trainer package.
"""

__version__ = "0.1.0"
