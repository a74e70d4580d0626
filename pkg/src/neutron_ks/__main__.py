import sys

from neutron_ks.cli import main

sys.exit(main())
