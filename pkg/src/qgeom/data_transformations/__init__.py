from .data_baseclasses import DataWithStatistics, SpectrumWithStatistics
from .quantum_geometry_analysis import (
    MatrixConfigurationSection,
    QuantumGeometryAnalysis,
    QuantumGeometryResult,
)
