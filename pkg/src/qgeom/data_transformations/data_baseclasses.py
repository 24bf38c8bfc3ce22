import numpy as np
from nomad.datamodel.data import ArchiveSection
from nomad.metainfo import Quantity
from scipy import stats


class DataWithStatistics(ArchiveSection):
    count = Quantity(type=np.dtype(np.int64))

    mean = Quantity(type=np.dtype(np.float64))

    variance = Quantity(type=np.dtype(np.float64))

    minimum = Quantity(type=np.dtype(np.float64))

    maximum = Quantity(type=np.dtype(np.float64))

    data = Quantity(type=np.dtype(np.float64), shape=['*'])

    def normalize(self, archive, logger):
        if self.data is None or len(self.data) == 0:
            return
        summary = stats.describe(np.asarray(self.data, dtype=np.float64), ddof=0)
        self.count = summary.nobs
        self.mean = summary.mean
        self.variance = summary.variance
        self.minimum, self.maximum = summary.minmax


class SpectrumWithStatistics(DataWithStatistics):
    """Sorted real spectrum, indexed for plotting against its position."""

    index = Quantity(type=np.dtype(np.int64), shape=['*'])

    def normalize(self, archive, logger):
        if self.data is not None and len(self.data) > 0:
            self.data = np.sort(np.asarray(self.data, dtype=np.float64))
            self.index = np.arange(len(self.data))
        super().normalize(archive, logger)
