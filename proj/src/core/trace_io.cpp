#include "trace_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "util.hpp"

namespace psl {

namespace {

const char* variant_name(Variant v) {
  return v == Variant::PushSum ? "push-sum" : "plain";
}

Variant parse_variant(const std::string& s, const std::string& where) {
  if (s == "push-sum") return Variant::PushSum;
  if (s == "plain") return Variant::Plain;
  throw ValidationError(where + ": unknown variant '" + s + "'");
}

const char* record_name(RecordMode r) {
  return r == RecordMode::Full ? "full" : "summary";
}

RecordMode parse_record(const std::string& s, const std::string& where) {
  if (s == "full") return RecordMode::Full;
  if (s == "summary") return RecordMode::Summary;
  throw ValidationError(where + ": unknown record mode '" + s + "'");
}

}  // namespace

std::string trace_to_text(const Trace& trace) {
  std::string out;
  out.reserve(trace.steps.size() * 32 * static_cast<std::size_t>(trace.n) + 64);
  out += "pushsum-trace ";
  out += format_hex(trace.config_hash);
  out += ' ';
  out += format_hex(trace.seed);
  out += ' ';
  out += std::to_string(trace.n);
  out += ' ';
  out += std::to_string(trace.m);
  out += ' ';
  out += std::to_string(trace.horizon);
  out += ' ';
  out += variant_name(trace.variant);
  out += ' ';
  out += record_name(trace.record);
  out += '\n';
  for (const TraceStep& step : trace.steps) {
    out += std::to_string(step.k);
    for (int i = 0; i < trace.n; ++i) {
      for (int t = 0; t < trace.m; ++t) {
        out += ' ';
        out += format_g17(step.log_belief_at(i, t, trace.m));
      }
      out += ' ';
      out += format_g17(step.weight[static_cast<std::size_t>(i)]);
      out += ' ';
      out += std::to_string(step.signal[static_cast<std::size_t>(i)]);
    }
    out += '\n';
  }
  return out;
}

void write_trace_text(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("trace: cannot open '" + path + "' for writing");
  out << trace_to_text(trace);
  if (!out) throw Error("trace: write to '" + path + "' failed");
}

Trace trace_from_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string magic;
  in >> magic;
  if (magic != "pushsum-trace")
    throw ValidationError(origin + ": not a trace file (bad magic)");
  std::string hash_hex, seed_hex, variant_s, record_s;
  Trace trace;
  in >> hash_hex >> seed_hex >> trace.n >> trace.m >> trace.horizon >>
      variant_s >> record_s;
  if (!in) throw ValidationError(origin + ": malformed trace header");
  trace.config_hash = std::stoull(hash_hex, nullptr, 16);
  trace.seed = std::stoull(seed_hex, nullptr, 16);
  trace.variant = parse_variant(variant_s, origin);
  trace.record = parse_record(record_s, origin);
  if (trace.n < 1 || trace.m < 2 || trace.horizon < 1)
    throw ValidationError(origin + ": invalid trace dimensions");

  TraceStep step;
  while (in >> step.k) {
    step.log_belief.resize(static_cast<std::size_t>(trace.n) *
                           static_cast<std::size_t>(trace.m));
    step.weight.resize(static_cast<std::size_t>(trace.n));
    step.signal.resize(static_cast<std::size_t>(trace.n));
    for (int i = 0; i < trace.n; ++i) {
      for (int t = 0; t < trace.m; ++t)
        in >> step.log_belief[static_cast<std::size_t>(i * trace.m + t)];
      in >> step.weight[static_cast<std::size_t>(i)];
      in >> step.signal[static_cast<std::size_t>(i)];
    }
    if (!in) throw ValidationError(origin + ": truncated step record at k = " +
                                   std::to_string(step.k));
    trace.steps.push_back(step);
  }
  return trace;
}

Trace read_trace_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("trace file '" + path + "': cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return trace_from_text(buf.str(), path);
}

void write_trace_json(const Trace& trace, const std::string& path) {
  nlohmann::json j;
  j["format"] = "pushsum-trace";
  j["config_hash"] = format_hex(trace.config_hash);
  j["seed"] = format_hex(trace.seed);
  j["n"] = trace.n;
  j["m"] = trace.m;
  j["horizon"] = trace.horizon;
  j["variant"] = variant_name(trace.variant);
  j["record"] = record_name(trace.record);
  nlohmann::json steps = nlohmann::json::array();
  for (const TraceStep& step : trace.steps) {
    nlohmann::json agents = nlohmann::json::array();
    for (int i = 0; i < trace.n; ++i) {
      nlohmann::json agent;
      std::vector<double> lb(static_cast<std::size_t>(trace.m));
      for (int t = 0; t < trace.m; ++t)
        lb[static_cast<std::size_t>(t)] = step.log_belief_at(i, t, trace.m);
      agent["log_belief"] = lb;
      agent["weight"] = step.weight[static_cast<std::size_t>(i)];
      agent["signal"] = step.signal[static_cast<std::size_t>(i)];
      agents.push_back(std::move(agent));
    }
    steps.push_back({{"k", step.k}, {"agents", std::move(agents)}});
  }
  j["steps"] = std::move(steps);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("trace: cannot open '" + path + "' for writing");
  out << j.dump(1, ' ') << '\n';
}

Trace read_trace_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("trace file '" + path + "': cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("trace file '" + path + "': " + e.what());
  }
  try {
    if (j.at("format") != "pushsum-trace")
      throw ValidationError("trace file '" + path + "': wrong format tag");
    Trace trace;
    trace.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    trace.seed = std::stoull(j.at("seed").get<std::string>(), nullptr, 16);
    trace.n = j.at("n").get<int>();
    trace.m = j.at("m").get<int>();
    trace.horizon = j.at("horizon").get<std::int64_t>();
    trace.variant = parse_variant(j.at("variant").get<std::string>(), path);
    trace.record = parse_record(j.at("record").get<std::string>(), path);
    for (const auto& js : j.at("steps")) {
      TraceStep step;
      step.k = js.at("k").get<std::int64_t>();
      const auto& agents = js.at("agents");
      if (static_cast<int>(agents.size()) != trace.n)
        throw ValidationError("trace file '" + path + "': agent count mismatch");
      for (const auto& ja : agents) {
        const auto lb = ja.at("log_belief").get<std::vector<double>>();
        if (static_cast<int>(lb.size()) != trace.m)
          throw ValidationError("trace file '" + path + "': belief size mismatch");
        step.log_belief.insert(step.log_belief.end(), lb.begin(), lb.end());
        step.weight.push_back(ja.at("weight").get<double>());
        step.signal.push_back(ja.at("signal").get<int>());
      }
      trace.steps.push_back(std::move(step));
    }
    return trace;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("trace file '" + path + "': " + e.what());
  }
}

Trace read_trace_any(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("trace file '" + path + "': cannot open");
  const int first = in.peek();
  in.close();
  if (first == '{') return read_trace_json(path);
  return read_trace_text(path);
}

}  // namespace psl
