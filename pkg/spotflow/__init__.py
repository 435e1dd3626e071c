"""Two-channel microarray analysis with replayable provenance."""

from .version import __version__

from .abc import *
from .errors import *
from .json import *
from .dataclass import *
from .layout import *
from .config import *
from .ingest import *
from .distributions import *
from .stats import *
from .normalize import *
from .tables import *
from .diffexpr import *
from .cluster import *
from .classify import *
from .netmod import *
from .plots import *
from .provenance import *
from .container import *
from .operations import *
