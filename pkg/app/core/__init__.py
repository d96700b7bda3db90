"""
Core processing stages of the NILM disaggregator: trace loading, filtering,
edge detection, state clustering, the appliance database, particle filtering,
evaluation and the online pipeline that ties them together.
"""
