"""Tools for writing results as text, JSON and CSV.

Contains a module to format one-quantity-per-row tables as text or JSON for
terminal output, and a module to write CSV files with a provenance line.
"""
from . import formatter
from . import csv_output
