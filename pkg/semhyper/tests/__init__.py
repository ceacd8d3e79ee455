# Copyright 2026 The semhyper authors
# Licensed under the MIT license

from .baselines import BaselinesTest
from .channel import ChannelTest
from .cli import CliTest
from .config import ConfigTest
from .core import CoreTest
from .follower import FollowerTest
from .hypergame import HypergameTest
from .leader import LeaderTest
from .oracle import OracleTest
from .scenario import ScenarioTest
from .util import UtilTest
from .utilities import UtilitiesTest
