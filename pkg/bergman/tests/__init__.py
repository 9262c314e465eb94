import os
import unittest

SLOW = os.environ.get('BERGMAN_SLOW_TESTS', '').lower() in ('1', 'true', 'yes')

slow = unittest.skipUnless(SLOW, 'set BERGMAN_SLOW_TESTS=1 to run acceptance-size cases')
