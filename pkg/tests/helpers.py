import dataclasses

from boostesr.sim import ConverterParams

DESIGN = dict(v_in=12.0, l=240e-6, c=160e-6, esr=0.0, r_load=20.0, f_sw=10e3, duty=0.4)


def params(**kw):
    return ConverterParams(**{**DESIGN, **kw})


def as_dict(p):
    return dataclasses.asdict(p)
