#pragma once

#include "ik/isolation_kernel.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ik {

// Shortest text (at most 17 significant digits) that parses back to the
// same bits.
std::string format_double(double v);
double parse_double(std::string_view text);

// IKM1 model file: a header line
//   IKM1 psi=<psi> t=<t> dim=<d> seed=<s>
// then t blocks of psi lines, each a dense comma-separated reference point.
void write_model(std::ostream& out, const IKModel& model);
IKModel read_model(std::istream& in);

// IKC1 code file: header `IKC1 psi=<psi> t=<t> n=<n>`, then one line of t
// space-separated cell indices per point.
void write_codes(std::ostream& out, std::span<const IKCode> codes);
std::vector<IKCode> read_codes(std::istream& in);

}  // namespace ik
