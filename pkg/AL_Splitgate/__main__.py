import sys
from AL_Splitgate.CLI import main

sys.exit(main())
