//! End-to-end acceptance checks. Populated alongside the test suite.
