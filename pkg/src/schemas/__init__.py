# flake8: noqa
# Schemas package
from .model import *
from .data import *
from .training import *
from .metrics import *
from .checkpoint import *
from .evaluation import *
