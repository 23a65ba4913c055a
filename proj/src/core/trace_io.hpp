#pragma once

#include <string>

#include "trace.hpp"

namespace psl {

/// Line-oriented text form. Header:
///   pushsum-trace <config_hash hex> <seed hex> <n> <m> <horizon> <variant> <record>
/// then one line per recorded step:
///   <k> then per agent: m log-beliefs, weight, signal
/// Floats are printed with 17 significant digits so the form round-trips
/// losslessly.
void write_trace_text(const Trace& trace, const std::string& path);
Trace read_trace_text(const std::string& path);
std::string trace_to_text(const Trace& trace);
Trace trace_from_text(const std::string& text, const std::string& origin = "<string>");

/// Structured (JSON) form carrying the same fields.
void write_trace_json(const Trace& trace, const std::string& path);
Trace read_trace_json(const std::string& path);

/// Reads either form, dispatching on the leading byte.
Trace read_trace_any(const std::string& path);

}  // namespace psl
