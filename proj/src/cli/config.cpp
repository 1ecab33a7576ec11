#include "umri/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

extern char** environ;

namespace umri::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool parse_bool(const std::string& v, const std::string& what) {
  const std::string s = lower(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(what + ": expected a boolean, got '" + v + "'");
}

long parse_int(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long r = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return r;
  } catch (const std::exception&) {
    throw ConfigError(what + ": expected an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return r;
  } catch (const std::exception&) {
    throw ConfigError(what + ": expected a number, got '" + v + "'");
  }
}

std::vector<int> parse_int_list(const std::string& v, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_int(trim(item), what)));
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

}  // namespace

IniConfig IniConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

IniConfig IniConfig::parse_text(const std::string& text, const std::string& origin) {
  IniConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
      section = lower(trim(t.substr(1, t.size() - 2)));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value, got '" +
                        t + "'");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": key before any [section]");
    cfg.set(section, lower(trim(t.substr(0, eq))), trim(t.substr(eq + 1)));
  }
  return cfg;
}

IniConfig::Section* IniConfig::find(const std::string& name) {
  for (auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

const IniConfig::Section* IniConfig::find(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

void IniConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  Section* s = find(section);
  if (!s) {
    sections_.push_back({section, {}});
    s = &sections_.back();
  }
  for (auto& [k, v] : s->items)
    if (k == key) {
      v = value;
      return;
    }
  s->items.emplace_back(key, value);
}

bool IniConfig::has(const std::string& section, const std::string& key) const {
  const Section* s = find(section);
  if (!s) return false;
  for (const auto& [k, v] : s->items)
    if (k == key) return true;
  return false;
}

std::string IniConfig::get(const std::string& section, const std::string& key) const {
  const Section* s = find(section);
  if (s)
    for (const auto& [k, v] : s->items)
      if (k == key) return v;
  throw ConfigError("config: missing key [" + section + "] " + key);
}

std::string IniConfig::get_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

void IniConfig::apply_env_overrides() {
  for (char** env = environ; env && *env; ++env) {
    const std::string entry(*env);
    if (entry.rfind("UMRI__", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(6, eq - 6);
    const auto sep = name.find("__");
    if (sep == std::string::npos)
      throw ConfigError("malformed override " + entry.substr(0, eq) +
                        " (expected UMRI__SECTION__KEY)");
    set(lower(name.substr(0, sep)), lower(name.substr(sep + 2)), entry.substr(eq + 1));
  }
}

std::string IniConfig::dump() const {
  std::string out;
  for (const auto& s : sections_) {
    out += "[" + s.name + "]\n";
    for (const auto& [k, v] : s.items) out += k + " = " + v + "\n";
    out += "\n";
  }
  return out;
}

AcsSpec parse_acs_spec(const std::string& text) {
  if (text.rfind("acs:", 0) == 0)
    return AcsSpec::acs_lines(static_cast<int>(parse_int(text.substr(4), "acs spec")));
  if (text.rfind("cf:", 0) == 0)
    return AcsSpec::center_fraction(parse_double(text.substr(3), "acs spec"));
  throw ConfigError("acs spec '" + text + "' (expected acs:<lines> or cf:<fraction>)");
}

std::string acs_spec_to_string(const AcsSpec& acs) {
  char buf[64];
  if (acs.kind == AcsSpec::Kind::Lines) {
    std::snprintf(buf, sizeof(buf), "acs:%d", acs.lines);
  } else {
    std::snprintf(buf, sizeof(buf), "cf:%.17g", acs.fraction);
  }
  return buf;
}

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  cfg.counts = {{sim::PhantomFamily::A, 320}, {sim::PhantomFamily::B, 80},
                {sim::PhantomFamily::C, 80}};
  cfg.model.variant = recon::Variant::VitFusion;
  cfg.model.cascades = 4;
  cfg.model.denoiser = recon::DenoiserConfig::desk();
  cfg.schedule.lr = 1e-3;
  cfg.schedule.epochs = 50;
  cfg.schedule.decay_epoch = 40;
  cfg.schedule.patience = 5;
  cfg.eval_cells = {{sim::PhantomFamily::A, 4, AcsSpec::acs_lines(8)}};
  return cfg;
}

RunConfig RunConfig::from_ini(IniConfig ini) {
  RunConfig cfg = defaults();

  cfg.seed = static_cast<std::uint64_t>(parse_int(ini.get_or("run", "seed", "1"), "[run] seed"));
  cfg.out_dir = ini.get_or("run", "out_dir", cfg.out_dir);
  cfg.threads = static_cast<int>(parse_int(ini.get_or("run", "threads", "0"), "[run] threads"));
  cfg.deterministic =
      parse_bool(ini.get_or("run", "deterministic", "true"), "[run] deterministic");

  cfg.dataset_dir = ini.get_or("dataset", "dir", cfg.dataset_dir);
  cfg.image_size =
      static_cast<int>(parse_int(ini.get_or("dataset", "size", "64"), "[dataset] size"));
  cfg.coils = static_cast<int>(parse_int(ini.get_or("dataset", "coils", "4"), "[dataset] coils"));
  cfg.noise_std = parse_double(ini.get_or("dataset", "noise_std", "0.005"), "[dataset] noise_std");
  cfg.counts.clear();
  cfg.counts[sim::PhantomFamily::A] =
      static_cast<int>(parse_int(ini.get_or("dataset", "count_a", "320"), "[dataset] count_a"));
  cfg.counts[sim::PhantomFamily::B] =
      static_cast<int>(parse_int(ini.get_or("dataset", "count_b", "80"), "[dataset] count_b"));
  cfg.counts[sim::PhantomFamily::C] =
      static_cast<int>(parse_int(ini.get_or("dataset", "count_c", "80"), "[dataset] count_c"));
  cfg.fractions[0] =
      parse_double(ini.get_or("dataset", "frac_train", "0.625"), "[dataset] frac_train");
  cfg.fractions[1] = parse_double(ini.get_or("dataset", "frac_val", "0.125"), "[dataset] frac_val");
  cfg.fractions[2] = parse_double(ini.get_or("dataset", "frac_test", "0.25"), "[dataset] frac_test");
  cfg.train_family = sim::family_from_string(ini.get_or("dataset", "train_family", "A"));

  cfg.acceleration = static_cast<int>(parse_int(ini.get_or("mask", "r", "4"), "[mask] r"));
  if (ini.has("mask", "center_fraction") && ini.has("mask", "acs_lines"))
    throw ConfigError("[mask]: give either acs_lines or center_fraction, not both");
  if (ini.has("mask", "center_fraction")) {
    cfg.acs = AcsSpec::center_fraction(
        parse_double(ini.get("mask", "center_fraction"), "[mask] center_fraction"));
  } else {
    cfg.acs = AcsSpec::acs_lines(
        static_cast<int>(parse_int(ini.get_or("mask", "acs_lines", "8"), "[mask] acs_lines")));
  }

  cfg.model.variant = recon::variant_from_string(ini.get_or("model", "variant", "vit-fusion"));
  cfg.model.cascades =
      static_cast<int>(parse_int(ini.get_or("model", "cascades", "4"), "[model] cascades"));
  cfg.model.shared_denoiser =
      parse_bool(ini.get_or("model", "shared_denoiser", "true"), "[model] shared_denoiser");
  const std::string preset = ini.get_or("model", "encoder", "desk");
  cfg.model.denoiser = recon::DenoiserConfig::for_encoder(VitConfig::preset(preset));
  if (ini.has("model", "decoder_channels"))
    cfg.model.denoiser.decoder_channels =
        parse_int_list(ini.get("model", "decoder_channels"), "[model] decoder_channels");
  if (ini.has("model", "skip_layers")) {
    const auto v = parse_int_list(ini.get("model", "skip_layers"), "[model] skip_layers");
    if (v.size() != 3) throw ConfigError("[model] skip_layers: expected exactly three layers");
    cfg.model.denoiser.skip_layers = {v[0], v[1], v[2]};
  }
  cfg.model.denoiser.p_lo =
      parse_double(ini.get_or("model", "percentile_lo", "1"), "[model] percentile_lo");
  cfg.model.denoiser.p_hi =
      parse_double(ini.get_or("model", "percentile_hi", "99"), "[model] percentile_hi");
  cfg.model.denoiser.input_skip_channels = static_cast<int>(
      parse_int(ini.get_or("model", "input_skip_channels", "8"), "[model] input_skip_channels"));
  cfg.model.denoiser.residual_output =
      parse_bool(ini.get_or("model", "residual_output", "false"), "[model] residual_output");
  cfg.model.cnn.unet.base_channels = static_cast<int>(
      parse_int(ini.get_or("model", "cnn_base_channels", "16"), "[model] cnn_base_channels"));
  cfg.model.cnn.unet.pools =
      static_cast<int>(parse_int(ini.get_or("model", "cnn_pools", "3"), "[model] cnn_pools"));
  cfg.encoder_weights = ini.get_or("model", "encoder_weights", "");

  cfg.model.sme.pooling_layers = static_cast<int>(
      parse_int(ini.get_or("sme", "pooling_layers", "4"), "[sme] pooling_layers"));
  cfg.model.sme.base_channels =
      static_cast<int>(parse_int(ini.get_or("sme", "base_channels", "8"), "[sme] base_channels"));

  cfg.schedule.lr = parse_double(ini.get_or("schedule", "lr", "0.001"), "[schedule] lr");
  cfg.schedule.epochs =
      static_cast<int>(parse_int(ini.get_or("schedule", "epochs", "50"), "[schedule] epochs"));
  cfg.schedule.decay_epoch = static_cast<int>(
      parse_int(ini.get_or("schedule", "decay_epoch", "40"), "[schedule] decay_epoch"));
  cfg.schedule.patience =
      static_cast<int>(parse_int(ini.get_or("schedule", "patience", "5"), "[schedule] patience"));
  cfg.schedule.seed = cfg.seed;

  // [eval] cells: every key starting with "cell", value "FAMILY R ACSSPEC"
  std::vector<EvalCell> cells;
  for (int i = 1; i <= 64; ++i) {
    const std::string key = "cell" + std::to_string(i);
    if (!ini.has("eval", key)) continue;
    std::stringstream ss(ini.get("eval", key));
    std::string fam, r, acs;
    if (!(ss >> fam >> r >> acs))
      throw ConfigError("[eval] " + key + ": expected 'FAMILY R ACSSPEC'");
    EvalCell cell;
    cell.family = sim::family_from_string(fam);
    cell.acceleration = static_cast<int>(parse_int(r, "[eval] " + key));
    cell.acs = parse_acs_spec(acs);
    cells.push_back(cell);
  }
  if (!cells.empty()) cfg.eval_cells = std::move(cells);

  cfg.raw = std::move(ini);
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path, bool apply_env) {
  IniConfig ini = IniConfig::parse_file(path);
  if (apply_env) ini.apply_env_overrides();
  return from_ini(std::move(ini));
}

void RunConfig::validate() const {
  if (out_dir.empty()) throw ConfigError("[run] out_dir must not be empty");
  if (threads < 0) throw ConfigError("[run] threads must be non-negative");
  if (image_size < 8) throw ConfigError("[dataset] size must be at least 8");
  if (coils < 1) throw ConfigError("[dataset] coils must be at least 1");
  if (noise_std < 0.0) throw ConfigError("[dataset] noise_std must be non-negative");
  for (const auto& [f, c] : counts)
    if (c < 0) throw ConfigError("[dataset] negative sample count");
  const double fsum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(fsum - 1.0) > 1e-9)
    throw ConfigError("[dataset] split fractions sum to " + std::to_string(fsum) +
                      ", expected 1");
  if (acceleration < 1) throw ConfigError("[mask] r must be at least 1");
  model.validate();
  if (schedule.lr <= 0.0) throw ConfigError("[schedule] lr must be positive");
  if (schedule.epochs < 1) throw ConfigError("[schedule] epochs must be positive");
  if (schedule.patience < 1) throw ConfigError("[schedule] patience must be positive");
  if (eval_cells.empty()) throw ConfigError("[eval] grid must be nonempty");
  for (const auto& c : eval_cells)
    if (c.acceleration < 1) throw ConfigError("[eval] cell acceleration must be at least 1");
}

}  // namespace umri::cli
