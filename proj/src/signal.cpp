#include "stlts/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace stlts {

void TimedStateSequence::validate() const {
  if (times.empty()) throw std::runtime_error("trace has no knots");
  if (times.size() != states.size())
    throw std::runtime_error("trace times/states length mismatch");
  if (std::abs(times.front()) > kTimeTol)
    throw std::runtime_error("trace must start at time 0");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::runtime_error("trace times must be strictly increasing");
  for (size_t i = 1; i < states.size(); ++i) {
    if (states[i].size() != states[0].size())
      throw std::runtime_error("trace states must share one variable set");
    for (const auto& [v, _] : states[0])
      if (!states[i].count(v))
        throw std::runtime_error("trace knot missing variable '" + v + "'");
  }
}

PwlTrace::PwlTrace(TimedStateSequence seq) : seq_(std::move(seq)) {
  seq_.validate();
  for (const auto& [v, _] : seq_.states[0]) vars_.push_back(v);
}

size_t PwlTrace::segment_index(double t) const {
  // index i with times[i] <= t <= times[i+1]
  const auto& ts = seq_.times;
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  size_t idx = (it == ts.begin()) ? 0 : (it - ts.begin() - 1);
  return std::min(idx, ts.size() - 2);
}

State PwlTrace::value_at(double t) const {
  State out;
  for (const auto& v : vars_) out[v] = value_at(t, v);
  return out;
}

double PwlTrace::value_at(double t, const std::string& var) const {
  const auto& ts = seq_.times;
  if (t <= ts.front()) return seq_.states.front().at(var);
  if (t >= ts.back()) return seq_.states.back().at(var);
  size_t i = segment_index(t);
  double t0 = ts[i], t1 = ts[i + 1];
  double x0 = seq_.states[i].at(var), x1 = seq_.states[i + 1].at(var);
  double lam = (t - t0) / (t1 - t0);
  return (1.0 - lam) * x0 + lam * x1;
}

double PwlTrace::margin_at(const LinearPredicate& p, double t) const {
  double m = p.offset;
  for (const auto& [v, c] : p.coeffs) m += c * value_at(t, v);
  return m;
}

std::vector<double> PwlTrace::knot_margins(const LinearPredicate& p) const {
  std::vector<double> ms;
  ms.reserve(seq_.size());
  for (const auto& st : seq_.states) ms.push_back(p.margin(st));
  return ms;
}

std::vector<double> PwlTrace::crossing_times(const LinearPredicate& p,
                                             double delta) const {
  std::vector<double> out;
  std::vector<double> ms = knot_margins(p);
  const auto& ts = seq_.times;
  for (double level : {0.0, delta}) {
    for (size_t i = 0; i + 1 < ts.size(); ++i) {
      double m0 = ms[i] - level, m1 = ms[i + 1] - level;
      if (std::abs(m1 - m0) <= kTimeTol) continue;  // flat segment
      if ((m0 > kTimeTol && m1 > kTimeTol) || (m0 < -kTimeTol && m1 < -kTimeTol))
        continue;
      double t = ts[i] + (ts[i + 1] - ts[i]) * (0.0 - m0) / (m1 - m0);
      if (t > ts.front() + kTimeTol && t < ts.back() - kTimeTol) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) <= kTimeTol; }),
            out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

static std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string trace_to_csv(const PwlTrace& trace) {
  std::ostringstream os;
  os << "time";
  for (const auto& v : trace.variables()) os << "," << v;
  os << "\n";
  const auto& seq = trace.knots();
  for (size_t i = 0; i < seq.size(); ++i) {
    os << fmt(seq.times[i]);
    for (const auto& v : trace.variables()) os << "," << fmt(seq.states[i].at(v));
    os << "\n";
  }
  return os.str();
}

PwlTrace trace_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty CSV");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  std::vector<std::string> cols;
  {
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
  }
  if (cols.empty() || cols[0] != "time")
    throw std::runtime_error("CSV header must start with 'time'");
  TimedStateSequence seq;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != cols.size())
      throw std::runtime_error("CSV row width does not match header");
    seq.times.push_back(vals[0]);
    State st;
    for (size_t j = 1; j < cols.size(); ++j) st[cols[j]] = vals[j];
    seq.states.push_back(std::move(st));
  }
  return PwlTrace(std::move(seq));
}

std::string trace_to_json(const PwlTrace& trace) {
  nlohmann::json j;
  j["times"] = trace.knots().times;
  j["states"] = nlohmann::json::array();
  for (const auto& st : trace.knots().states) {
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [v, x] : st) s[v] = x;
    j["states"].push_back(s);
  }
  return j.dump(2);
}

PwlTrace trace_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TimedStateSequence seq;
  for (double t : j.at("times")) seq.times.push_back(t);
  for (const auto& s : j.at("states")) {
    State st;
    for (auto it = s.begin(); it != s.end(); ++it) st[it.key()] = it.value().get<double>();
    seq.states.push_back(std::move(st));
  }
  return PwlTrace(std::move(seq));
}

static std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

PwlTrace load_trace_file(const std::string& path) {
  std::string text = slurp(path);
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
    return trace_from_json(text);
  return trace_from_csv(text);
}

void save_trace_file(const PwlTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
    out << trace_to_json(trace);
  else
    out << trace_to_csv(trace);
}

}  // namespace stlts
