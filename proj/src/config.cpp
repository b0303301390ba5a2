#include "ssmp/config.hpp"

#include <fstream>
#include <sstream>

#include "ssmp/stats.hpp"

namespace ssmp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(const std::string& tok, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(tok, &used);
    return used == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text, std::string source) {
  KeyValueFile kv;
  kv.source_ = std::move(source);
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(kv.source_ + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(kv.source_ + ":" + std::to_string(lineno) + ": empty key");
    if (kv.entries_.count(key))
      throw ConfigError(kv.source_ + ":" + std::to_string(lineno) + ": key '" + key + "' repeated (first on line " +
                        std::to_string(kv.entries_[key].line) + ")");
    kv.entries_[key] = Entry{trim(body.substr(eq + 1)), lineno};
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValueFile::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  const std::string where = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
  throw ConfigError(where + ": key '" + key + "': " + what);
}

const std::string& KeyValueFile::raw(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(key, "missing");
  return it->second.value;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double KeyValueFile::get_double(const std::string& key) const {
  double v = 0.0;
  if (!parse_double(raw(key), v)) fail(key, "not a number: '" + raw(key) + "'");
  return v;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t KeyValueFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] == '-') fail(key, "must be nonnegative");
    const auto v = std::stoull(s, &used);
    if (used != s.size()) fail(key, "not an integer: '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(key, "not an integer: '" + s + "'");
  }
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  std::istringstream in(raw(key));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    if (!parse_double(tok, v)) fail(key, "not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? get_doubles(key) : fallback;
}

std::vector<std::string> KeyValueFile::keys() const {
  std::vector<std::string> k;
  for (const auto& [key, _] : entries_) k.push_back(key);
  return k;
}

MapSpec spec_from_config(const KeyValueFile& kv) {
  const double states_d = kv.get_double("states");
  if (!(states_d >= 1.0) || states_d != std::floor(states_d)) kv.fail("states", "must be a positive integer");
  const auto n = static_cast<std::size_t>(states_d);
  const auto N = static_cast<Eigen::Index>(n);

  MapSpec spec;
  spec.Q = Eigen::MatrixXd::Zero(N, N);
  if (kv.has("Q")) {
    std::istringstream rows(kv.raw("Q"));
    std::string row;
    std::size_t r = 0;
    while (std::getline(rows, row, ';')) {
      if (r >= n) kv.fail("Q", "more than " + std::to_string(n) + " rows");
      std::istringstream cells(row);
      std::string tok;
      std::size_t c = 0;
      while (cells >> tok) {
        double v = 0.0;
        if (!parse_double(tok, v)) kv.fail("Q", "not a number: '" + tok + "'");
        if (c >= n) kv.fail("Q", "row " + std::to_string(r) + " has more than " + std::to_string(n) + " entries");
        spec.Q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c++)) = v;
      }
      if (c != n) kv.fail("Q", "row " + std::to_string(r) + " has " + std::to_string(c) + " entries");
      ++r;
    }
    if (r != n) kv.fail("Q", "expected " + std::to_string(n) + " rows separated by ';'");
  } else if (n > 1) {
    kv.fail("Q", "missing (required when states > 1)");
  }

  const auto per_state = [&](const std::string& key) {
    auto v = kv.get_doubles(key, std::vector<double>(n, 0.0));
    if (v.size() != n) kv.fail(key, "expected " + std::to_string(n) + " values");
    return v;
  };
  const auto drift = per_state("drift");
  const auto sigma = per_state("sigma");
  spec.ordinate.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    spec.ordinate[j].drift = drift[j];
    spec.ordinate[j].sigma = sigma[j];
    const std::string key = "jump[" + std::to_string(j) + "]";
    if (!kv.has(key)) continue;
    std::istringstream in(kv.raw(key));
    std::string rate_tok;
    in >> rate_tok;
    double rate = 0.0;
    if (!parse_double(rate_tok, rate)) kv.fail(key, "expected '<rate> <law>'");
    std::string law_text;
    std::getline(in, law_text);
    try {
      spec.ordinate[j].jump_rate = rate;
      spec.ordinate[j].jump = law_text.find_first_not_of(" \t") == std::string::npos ? JumpLaw::none()
                                                                                        : JumpLaw::from_text(law_text);
    } catch (const std::invalid_argument& e) {
      kv.fail(key, e.what());
    }
  }
  spec.switch_jump.assign(n, std::vector<JumpLaw>(n, JumpLaw::none()));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      const std::string key = "switch_jump[" + std::to_string(j) + "][" + std::to_string(k) + "]";
      if (!kv.has(key)) continue;
      if (j == k) kv.fail(key, "diagonal switch jumps are meaningless");
      try {
        spec.switch_jump[j][k] = JumpLaw::from_text(kv.raw(key));
      } catch (const std::invalid_argument& e) {
        kv.fail(key, e.what());
      }
    }
  spec.kill_rate = kv.get_double("kill_rate", 0.0);
  return validate_spec(std::move(spec));
}

MapSpec parse_spec(std::string_view text) { return spec_from_config(KeyValueFile::parse(text, "<spec>")); }

MapSpec load_spec(const std::filesystem::path& path) { return spec_from_config(KeyValueFile::load(path)); }

std::string spec_to_text(const MapSpec& spec) {
  const std::size_t n = spec.n_states();
  std::string out = "states = " + std::to_string(n) + "\nQ =";
  for (std::size_t j = 0; j < n; ++j) {
    if (j) out += " ;";
    for (std::size_t k = 0; k < n; ++k)
      out += " " + format_double(spec.Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
  }
  out += "\ndrift =";
  for (const auto& l : spec.ordinate) out += " " + format_double(l.drift);
  out += "\nsigma =";
  for (const auto& l : spec.ordinate) out += " " + format_double(l.sigma);
  out += "\n";
  for (std::size_t j = 0; j < n; ++j)
    if (spec.ordinate[j].jump_rate != 0.0 || !spec.ordinate[j].jump.is_none())
      out += "jump[" + std::to_string(j) + "] = " + format_double(spec.ordinate[j].jump_rate) + " " +
             spec.ordinate[j].jump.to_text() + "\n";
  for (std::size_t j = 0; j < spec.switch_jump.size(); ++j)
    for (std::size_t k = 0; k < spec.switch_jump[j].size(); ++k)
      if (j != k && !spec.switch_jump[j][k].is_none())
        out += "switch_jump[" + std::to_string(j) + "][" + std::to_string(k) + "] = " + spec.switch_jump[j][k].to_text() +
               "\n";
  out += "kill_rate = " + format_double(spec.kill_rate) + "\n";
  return out;
}

}  // namespace ssmp
