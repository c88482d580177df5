#pragma once

// Qualified stringification: unqualified lookup would find the library's
// toString overloads (which return string_view) through ADL.
#define DOCTEST_STRINGIFY(...) ::doctest::toString(__VA_ARGS__)
#include <doctest.h>
