from tentlab.disc.analytic import *
from tentlab.disc.atomic import *
from tentlab.disc.carleson import *
from tentlab.disc.geometry import *
from tentlab.disc.grid import *
from tentlab.disc.maximal import *
from tentlab.disc.measure import *
from tentlab.disc.tent import *
from tentlab.disc.weights import *


def init_session(depth=8):
    default_grid(depth)
    for weight in (constant, log_weight, exponential):
        weight.hat_values(default_grid(depth).outer_defect)
        weight.annulus_values(default_grid(depth).outer_defect)
