// SPDX-License-Identifier: Apache-2.0

//! Holds the `acceptance` test target; no library code.
