"""
Configuration settings for the NILM disaggregator application.

Process-level settings only. Algorithm parameters live in the JSON pipeline
config (see app/models/settings.py and config/default_config.json).
"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Logging Configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "logs/nilm.log")

# File paths and directories
DEFAULT_OUTPUT_DIR = os.getenv("DEFAULT_OUTPUT_DIR", "output")
DEFAULT_CONFIG_PATH = os.getenv("DEFAULT_CONFIG_PATH", "config/default_config.json")
DEFAULT_REFERENCE_STATES = os.getenv("DEFAULT_REFERENCE_STATES", "data/reference_states_redd.json")

# Output formatting
ESTIMATE_FLOAT_DECIMALS = int(os.getenv("ESTIMATE_FLOAT_DECIMALS", "6"))
TRACE_FLOAT_DECIMALS = int(os.getenv("TRACE_FLOAT_DECIMALS", "3"))

# Exact enumeration filter is only tractable for small appliance sets
EXACT_FILTER_MAX_APPLIANCES = int(os.getenv("EXACT_FILTER_MAX_APPLIANCES", "12"))
