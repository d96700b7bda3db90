"""
Data models for the NILM disaggregator application.
"""
from app.models.trace import PowerSample, GapReport, GroundTruthTrace, ApplianceSpec
from app.models.edges import EdgeDirection, EdgeEvent, EdgePair
from app.models.states import StateHistogram, PowerState
from app.models.appliance import ApplianceState, ApplianceMetadata, ApplianceModel, UpdateReport, FHMM
from app.models.estimate import ApplianceEstimate, DisaggregationEstimate, EstimateBlock, EstimateStream
from app.models.report import UNKNOWN, StateMapping, VirtualAppliances, EvaluationReport

__all__ = [
    'PowerSample',
    'GapReport',
    'GroundTruthTrace',
    'ApplianceSpec',
    'EdgeDirection',
    'EdgeEvent',
    'EdgePair',
    'StateHistogram',
    'PowerState',
    'ApplianceState',
    'ApplianceMetadata',
    'ApplianceModel',
    'UpdateReport',
    'FHMM',
    'ApplianceEstimate',
    'DisaggregationEstimate',
    'EstimateBlock',
    'EstimateStream',
    'UNKNOWN',
    'StateMapping',
    'VirtualAppliances',
    'EvaluationReport'
]
