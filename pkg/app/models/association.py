"""关联模型"""
from app.models.geometry import GeomParams
from app.utils.errors import ConfigError


class Association:
    """一条光束与一个表面之间的关联"""

    def __init__(self, beam_id, surface_id, object_id, intersection, signed_dist, min_dist,
                 zenith, azimuth, rank=1, azimuth_degenerate=False):
        self.beam_id = beam_id
        self.surface_id = surface_id
        self.object_id = object_id
        self.intersection = intersection
        self.signed_dist = signed_dist
        self.min_dist = min_dist
        self.zenith = zenith
        self.azimuth = azimuth
        self.rank = rank
        self.azimuth_degenerate = azimuth_degenerate

    def to_dict(self):
        return {
            'beam_id': self.beam_id,
            'surface_id': self.surface_id,
            'object_id': self.object_id,
            'intersection': [float(x) for x in self.intersection],
            'signed_dist': self.signed_dist,
            'min_dist': self.min_dist,
            'zenith': self.zenith,
            'azimuth': self.azimuth,
            'rank': self.rank,
            'azimuth_degenerate': self.azimuth_degenerate,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            beam_id=int(data['beam_id']),
            surface_id=data['surface_id'],
            object_id=data['object_id'],
            intersection=tuple(float(x) for x in data['intersection']),
            signed_dist=float(data['signed_dist']),
            min_dist=float(data['min_dist']),
            zenith=float(data['zenith']),
            azimuth=float(data['azimuth']),
            rank=int(data.get('rank', 1)),
            azimuth_degenerate=bool(data.get('azimuth_degenerate', False)),
        )

    def __repr__(self):
        return f'Association(beam={self.beam_id}, surface={self.surface_id!r}, rank={self.rank})'


class AssociationConfig:
    """关联配置"""

    # 候选排序方式
    ORDERING_MIN = 'min_signed_distance'
    ORDERING_MAX = 'max_signed_distance'
    ORDERINGS = (ORDERING_MIN, ORDERING_MAX)

    def __init__(self, geom=None, max_associations_per_beam=1, ordering=ORDERING_MIN):
        self.geom = geom or GeomParams()
        self.max_associations_per_beam = max_associations_per_beam
        self.ordering = ordering
        self.validate()

    def validate(self):
        if isinstance(self.max_associations_per_beam, bool) or not isinstance(self.max_associations_per_beam, int):
            raise ConfigError(f'max_associations_per_beam 必须是整数: {self.max_associations_per_beam!r}')
        if self.max_associations_per_beam < 1:
            raise ConfigError(f'max_associations_per_beam 必须 ≥ 1: {self.max_associations_per_beam}')
        if self.ordering not in self.ORDERINGS:
            raise ConfigError(f'未知的排序方式: {self.ordering!r}, 可选 {", ".join(self.ORDERINGS)}')

    def to_dict(self):
        data = self.geom.to_dict()
        data.update({
            'max_associations_per_beam': self.max_associations_per_beam,
            'ordering': self.ordering,
        })
        return data


class ObjectStats:
    """对象级强度与距离统计"""

    def __init__(self, object_id, point_count, intensity_mean, intensity_std, intensity_median,
                 intensity_q1, intensity_q3, signed_dist_mean, signed_dist_median,
                 min_dist_mean, min_dist_median, class_name=None, function=None):
        self.object_id = object_id
        self.point_count = point_count
        self.intensity_mean = intensity_mean
        self.intensity_std = intensity_std
        self.intensity_median = intensity_median
        self.intensity_q1 = intensity_q1
        self.intensity_q3 = intensity_q3
        self.signed_dist_mean = signed_dist_mean
        self.signed_dist_median = signed_dist_median
        self.min_dist_mean = min_dist_mean
        self.min_dist_median = min_dist_median
        self.class_name = class_name
        self.function = function

    FIELDS = ('object_id', 'class_name', 'function', 'point_count', 'intensity_mean', 'intensity_std',
              'intensity_median', 'intensity_q1', 'intensity_q3', 'signed_dist_mean',
              'signed_dist_median', 'min_dist_mean', 'min_dist_median')

    def to_dict(self):
        return {name: getattr(self, name) for name in self.FIELDS}


class AssociationSummary:
    """批量关联的汇总计数"""

    def __init__(self):
        self.total = 0
        self.associated = 0
        self.unassociated = 0
        self.malformed = 0
        self.zero_range = 0
        self.associations = 0
        self.per_class = {}
        self.within_15m = 0
        self.within_30m = 0

    @property
    def associated_fraction(self):
        return self.associated / self.total if self.total else 0.0

    def to_dict(self):
        associated = self.associated
        return {
            'total': self.total,
            'associated': associated,
            'unassociated': self.unassociated,
            'associated_fraction': self.associated_fraction,
            'associations': self.associations,
            'malformed': self.malformed,
            'zero_range': self.zero_range,
            'per_class': dict(sorted(self.per_class.items())),
            'share_within_15m': self.within_15m / associated if associated else 0.0,
            'share_within_30m': self.within_30m / associated if associated else 0.0,
        }
