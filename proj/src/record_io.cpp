#include "strobe/record_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace strobe {

namespace {

double parse_double(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw RecordCorrupt("bad number '" + s + "' in " + what);
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size() || errno == ERANGE) {
    throw RecordCorrupt("bad integer '" + s + "' in " + what);
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_record(std::ostream& os, const MeasurementRecord& r) {
  const SimParams& p = r.params;
  os << "# strobe measurement record v1\n";
  os << "# dim=" << p.dim << "\n";
  os << "# gamma=" << format_double(p.gamma) << "\n";
  os << "# dt=" << format_double(p.dt) << "\n";
  os << "# total_time=" << format_double(p.total_time) << "\n";
  os << "# allow_large_dt=" << (p.allow_large_dt ? 1 : 0) << "\n";
  os << "# steps=" << p.steps() << "\n";
  os << "# seed=" << r.seed << "\n";
  os << "# strategy=" << to_string(r.schedule.strategy) << "\n";
  os << "# delta_t=" << format_double(r.schedule.delta_t) << "\n";
  os << "# control_seed=" << r.schedule.seed << "\n";
  os << "# convention=" << to_string(r.convention) << "\n";
  os << "# alternation=";
  for (std::size_t i = 0; i < r.schedule.alternation.size(); ++i) {
    const Permutation& perm = r.schedule.alternation[i];
    os << (i ? "," : "")
       << (r.convention == PermutationConvention::Image ? perm.digits() : perm.inverse().digits());
  }
  os << "\n";
  os << "# integrator=" << to_string(r.integrator) << "\n";
  os << "# observable=" << r.observable << "\n";
  os << "# initial_state=" << r.initial_state << "\n";
  os << "# lambda_shift=" << format_double(r.lambda_shift) << "\n";
  if (r.final_state_hash) os << "# final_state_hash=" << *r.final_state_hash << "\n";
  if (r.final_state) {
    os << "# final_state=";
    const Matrix& m = *r.final_state;
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      os << (k ? " " : "") << format_double(m.data()[k].real()) << " " << format_double(m.data()[k].imag());
    }
    os << "\n";
  }
  os << "step_index,dR,unitary_id\n";
  std::size_t next = 0;
  for (std::size_t n = 0; n < r.increments.size(); ++n) {
    os << n << "," << format_double(r.increments[n]) << ",";
    if (next < r.control_log.size() && r.control_log[next].step == static_cast<std::int64_t>(n)) {
      os << r.control_log[next].id;
      ++next;
    }
    os << "\n";
  }
}

void write_record(const std::string& path, const MeasurementRecord& record) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  write_record(os, record);
  if (!os) throw ConfigError("write to '" + path + "' failed");
}

MeasurementRecord read_record(std::istream& is) {
  std::map<std::string, std::string> header;
  std::string line;
  bool columns = false;
  while (std::getline(is, line)) {
    if (line.rfind("#", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      header[key] = line.substr(eq + 1);
      continue;
    }
    if (line == "step_index,dR,unitary_id") {
      columns = true;
      break;
    }
    throw RecordCorrupt("unexpected line before the column header: '" + line + "'");
  }
  if (!columns) throw RecordCorrupt("record has no column header");

  auto need = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw RecordCorrupt("record header is missing '" + key + "'");
    return it->second;
  };

  MeasurementRecord r;
  r.params.dim = static_cast<int>(parse_u64(need("dim"), "dim"));
  r.params.gamma = parse_double(need("gamma"), "gamma");
  r.params.dt = parse_double(need("dt"), "dt");
  r.params.total_time = parse_double(need("total_time"), "total_time");
  if (header.count("allow_large_dt")) r.params.allow_large_dt = need("allow_large_dt") == "1";
  const std::uint64_t steps = parse_u64(need("steps"), "steps");
  if (static_cast<std::int64_t>(steps) != r.params.steps()) throw RecordCorrupt("steps disagrees with T/dt");
  r.seed = parse_u64(need("seed"), "seed");
  try {
    r.schedule.strategy = parse_strategy(need("strategy"));
    r.convention = parse_permutation_convention(need("convention"));
    r.integrator = parse_integrator(need("integrator"));
    r.schedule.delta_t = parse_double(need("delta_t"), "delta_t");
    r.schedule.seed = parse_u64(need("control_seed"), "control_seed");
    const std::string& alt = need("alternation");
    if (!alt.empty()) {
      for (const auto& d : split(alt, ',')) r.schedule.alternation.push_back(Permutation::from_digits(d, r.convention));
    }
  } catch (const ConfigError& e) {
    throw RecordCorrupt(std::string("record header: ") + e.what());
  }
  r.observable = need("observable");
  r.initial_state = need("initial_state");
  r.lambda_shift = parse_double(need("lambda_shift"), "lambda_shift");
  if (header.count("final_state_hash")) r.final_state_hash = parse_u64(header["final_state_hash"], "final_state_hash");
  if (header.count("final_state")) {
    std::istringstream fs(header["final_state"]);
    const int d = r.params.dim;
    Matrix m(d, d);
    std::string re, im;
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      if (!(fs >> re >> im)) throw RecordCorrupt("final_state has too few entries");
      m.data()[k] = Complex(parse_double(re, "final_state"), parse_double(im, "final_state"));
    }
    r.final_state = m;
  }

  r.increments.reserve(steps);
  std::uint64_t n = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw RecordCorrupt("row " + std::to_string(n) + " does not have 3 columns");
    if (parse_u64(cells[0], "step_index") != n) throw RecordCorrupt("row " + std::to_string(n) + " is out of sequence");
    r.increments.push_back(parse_double(cells[1], "dR"));
    if (!cells[2].empty()) r.control_log.push_back({static_cast<std::int64_t>(n), parse_u64(cells[2], "unitary_id")});
    ++n;
  }
  if (n != steps) {
    throw RecordCorrupt("record truncated: expected " + std::to_string(steps) + " rows, found " + std::to_string(n));
  }
  r.validate();
  return r;
}

MeasurementRecord shift_record(const MeasurementRecord& record, double lambda) {
  MeasurementRecord out = record;
  const double shift = std::sqrt(4.0 * record.params.gamma) * lambda * record.params.dt;
  for (double& r : out.increments) r += shift;
  out.lambda_shift += lambda;
  return out;
}

MeasurementRecord read_record(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw RecordCorrupt("cannot open record '" + path + "'");
  return read_record(is);
}

}  // namespace strobe
