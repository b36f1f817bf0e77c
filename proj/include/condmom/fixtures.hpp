#pragma once

// Plain-text fixture format for labeled finite spaces, one outcome per line:
//
//     # comment
//     id  prob  X  Y  Z
//
// `prob`, `X`, `Y` are reals (a/b rationals allowed, e.g. 1/3); `Z` is an
// opaque label.  The counterexample spaces used throughout the test suites
// ship both as files under fixtures/ and as embedded text here.

#include <istream>
#include <string>
#include <vector>

#include "condmom/finite_space.hpp"

namespace condmom {

struct LabeledSpace {
    FiniteSpace space;
    RandomMap x;
    RandomMap y;
    RandomMap z;
};

LabeledSpace load_fixture(std::istream& in);
LabeledSpace load_fixture_string(const std::string& text);
LabeledSpace load_fixture_file(const std::string& path);

// Built-in fixtures, by name.
//   remark3    three-point space, X = [w = 0], Y = w, Z constant
//   remark3_z  same space with Z(1) = Z(0) = a, Z(-1) = b
//   four_point four equiprobable points, X = [w <= 2], Y = w, Z constant
std::vector<std::string> builtin_fixture_names();
bool is_builtin_fixture(const std::string& name);
const std::string& builtin_fixture_text(const std::string& name);
LabeledSpace builtin_fixture(const std::string& name);

} // namespace condmom
