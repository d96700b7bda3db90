"""
Reporting modules for the NILM disaggregator application.
"""
