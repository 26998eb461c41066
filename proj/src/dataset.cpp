#include "jjtls/dataset.hpp"

#include <boost/crc.hpp>
#include <boost/tokenizer.hpp>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "jjtls/error.hpp"

namespace jjtls {
namespace {

using nlohmann::json;

[[noreturn]] void corrupt(std::string_view origin, const std::string& what) {
  throw Error(ErrorCategory::Io, std::string(origin) + ": " + what);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Header-checked CSV reader. Lines starting with '#' are comments.
class CsvReader {
 public:
  CsvReader(std::string_view text, std::string_view origin, const std::vector<std::string>& header)
      : origin_(origin) {
    std::istringstream in{std::string(text)};
    std::string line;
    bool seen_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> fields = split(line);
      if (!seen_header) {
        if (fields != header) corrupt(origin_, "unexpected header '" + line + "'");
        seen_header = true;
        continue;
      }
      if (fields.size() != header.size()) {
        corrupt(origin_, "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(fields.size()));
      }
      rows_.push_back(std::move(fields));
      lines_.push_back(line_no);
    }
    if (!seen_header) corrupt(origin_, "missing header");
  }

  std::size_t size() const { return rows_.size(); }
  const std::string& field(std::size_t row, std::size_t col) const { return rows_[row][col]; }

  double real(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row][col];
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) bad(row, col, "a number");
    return v;
  }

  long long integer(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row][col];
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) bad(row, col, "an integer");
    return v;
  }

  [[noreturn]] void bad(std::size_t row, std::size_t col, const std::string& expected) const {
    corrupt(origin_, "line " + std::to_string(lines_[row]) + ", column " + std::to_string(col + 1) +
                         ": expected " + expected + ", got '" + rows_[row][col] + "'");
  }

  template <typename F>
  auto parse(std::size_t row, std::size_t col, F&& f) const {
    try {
      return f(rows_[row][col]);
    } catch (const Error&) {
      bad(row, col, "a valid name");
    }
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    using Sep = boost::char_separator<char>;
    boost::tokenizer<Sep> tok(line, Sep(",", "", boost::keep_empty_tokens));
    return {tok.begin(), tok.end()};
  }

  std::string origin_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

std::string join_row(std::initializer_list<std::string> fields) {
  std::string s;
  bool first = true;
  for (const std::string& f : fields) {
    if (!first) s += ',';
    s += f;
    first = false;
  }
  s += '\n';
  return s;
}

std::string header_line(const std::vector<std::string>& header) {
  std::string s;
  for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
  return s + "\n";
}

const std::vector<std::string> t1map_header{"v_gate", "v_piezo", "freq_ghz", "t1_us", "noise_rel"};

const std::vector<std::string> ensemble_header{
    "id",         "host",        "location",      "delta_ghz",  "eps0_ghz",
    "dipole_enm", "dipole_cos",  "deformation_ghz", "kappa_gate_ghz_per_v", "kappa_piezo_ghz_per_v",
    "u_nm",       "v_nm",        "half_width_mhz"};

const std::vector<std::string> traces_header{
    "trace_id", "class",      "points",        "segments",      "gate_motion_mhz", "fit_ok",
    "delta_ghz", "eps0_ghz",  "kappa_gate_ghz_per_v", "kappa_piezo_ghz_per_v", "fit_rms_mhz",
    "gate_free", "piezo_free"};

const std::vector<std::string> points_header{"trace_id",  "segment",  "bias_index",   "v_gate",
                                             "v_piezo",   "freq_ghz", "depth_per_us", "width_mhz"};

const std::vector<std::string> densities_header{"segment", "swept", "rho_jj_per_ghz", "rho_surf_per_ghz",
                                                "rho_nc_per_ghz", "window_ghz"};

json plan_to_json(const SegmentPlan& plan) {
  json segs = json::array();
  for (const Segment& s : plan.segments) {
    segs.push_back({{"swept", channel_name(s.swept)},
                    {"start_v", s.start_v},
                    {"stop_v", s.stop_v},
                    {"step_v", s.step_v},
                    {"fixed_v", s.fixed_v},
                    {"gate_pattern_v", s.gate_pattern},
                    {"repetitions", s.repetitions}});
  }
  return {{"freqs", {{"start_ghz", plan.freqs.start_ghz}, {"step_ghz", plan.freqs.step_ghz}, {"count", plan.freqs.count}}},
          {"segments", segs}};
}

SegmentPlan plan_from_json(const json& j) {
  SegmentPlan plan;
  const json& f = j.at("freqs");
  plan.freqs.start_ghz = f.at("start_ghz").get<double>();
  plan.freqs.step_ghz = f.at("step_ghz").get<double>();
  plan.freqs.count = f.at("count").get<std::size_t>();
  for (const json& s : j.at("segments")) {
    Segment seg;
    seg.swept = parse_channel(s.at("swept").get<std::string>());
    seg.start_v = s.at("start_v").get<double>();
    seg.stop_v = s.at("stop_v").get<double>();
    seg.step_v = s.at("step_v").get<double>();
    seg.fixed_v = s.at("fixed_v").get<double>();
    seg.gate_pattern = s.at("gate_pattern_v").get<std::vector<double>>();
    seg.repetitions = s.at("repetitions").get<int>();
    plan.segments.push_back(std::move(seg));
  }
  return plan;
}

std::string segment_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "segment_%03zu.csv", i);
  return buf;
}

}  // namespace

std::string config_crc32(std::string_view config_text) {
  boost::crc_32_type crc;
  crc.process_bytes(config_text.data(), config_text.size());
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(crc.checksum()));
  return buf;
}

std::string current_utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::atoll(epoch));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_to_json(const RunManifest& m) {
  json j = {{"format", m.format},
            {"software_version", m.software_version},
            {"created_utc", m.created_utc},
            {"seed", m.seed},
            {"qubit_id", m.qubit_id},
            {"config_crc32", m.config_crc32},
            {"config", m.config_text},
            {"plan", plan_to_json(m.plan)},
            {"maps", m.map_files}};
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(std::string_view text, std::string_view origin) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.format = j.at("format").get<std::string>();
    if (m.format != dataset_format) corrupt(origin, "unsupported format '" + m.format + "'");
    m.software_version = j.at("software_version").get<std::string>();
    m.created_utc = j.at("created_utc").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.qubit_id = j.at("qubit_id").get<std::string>();
    m.config_crc32 = j.at("config_crc32").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    m.plan = plan_from_json(j.at("plan"));
    m.map_files = j.at("maps").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    corrupt(origin, e.what());
  }
  if (config_crc32(m.config_text) != m.config_crc32) corrupt(origin, "config checksum mismatch");
  if (m.map_files.size() != m.plan.segments.size()) corrupt(origin, "map count does not match the plan");
  return m;
}

std::string t1map_to_csv(const T1Map& map) {
  std::string out = header_line(t1map_header);
  for (std::size_t r = 0; r < map.rows(); ++r) {
    const std::string vg = num(map.biases[r].v_gate);
    const std::string vp = num(map.biases[r].v_piezo);
    for (std::size_t c = 0; c < map.cols(); ++c) {
      out += join_row({vg, vp, num(map.freqs_ghz[c]), num(map.t1(r, c)), num(map.noise(r, c))});
    }
  }
  return out;
}

T1Map t1map_from_csv(std::string_view text, int segment, Channel swept, std::string_view origin) {
  CsvReader csv(text, origin, t1map_header);
  T1Map map;
  map.segment = segment;
  map.swept = swept;
  if (csv.size() == 0) corrupt(origin, "no data rows");
  // The first bias block fixes the frequency axis.
  const BiasPoint first{csv.real(0, 0), csv.real(0, 1)};
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const BiasPoint b{csv.real(i, 0), csv.real(i, 1)};
    if (!(b == first)) break;
    map.freqs_ghz.push_back(csv.real(i, 2));
  }
  const std::size_t cols = map.freqs_ghz.size();
  if (csv.size() % cols != 0) corrupt(origin, "rows do not form complete bias blocks");
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const BiasPoint b{csv.real(i, 0), csv.real(i, 1)};
    if (i % cols == 0) {
      map.biases.push_back(b);
    } else if (!(b == map.biases.back())) {
      corrupt(origin, "bias changes inside a block at data row " + std::to_string(i + 1));
    }
    if (csv.real(i, 2) != map.freqs_ghz[i % cols]) {
      corrupt(origin, "frequency axis differs between bias blocks at data row " + std::to_string(i + 1));
    }
    map.t1_us.push_back(csv.real(i, 3));
    map.noise_rel.push_back(csv.real(i, 4));
  }
  try {
    map.validate();
  } catch (const Error& e) {
    corrupt(origin, e.what());
  }
  return map;
}

std::string ensemble_to_csv(const Ensemble& ensemble) {
  std::string out =
      "# ground truth for scoring only; the analysis path does not read this file\n" + header_line(ensemble_header);
  for (const Defect& d : ensemble) {
    out += join_row({std::to_string(d.id), std::string(host_name(d.host)), std::string(location_name(d.tls.location)),
                     num(d.tls.delta_ghz), num(d.tls.eps0_ghz), num(d.tls.dipole_enm), num(d.tls.dipole_cos),
                     num(d.tls.deformation_ghz), num(d.arms.kappa_gate), num(d.arms.kappa_piezo),
                     num(d.tls.position.u_nm), num(d.tls.position.v_nm), num(d.half_width_mhz)});
  }
  return out;
}

Ensemble ensemble_from_csv(std::string_view text, std::string_view origin) {
  CsvReader csv(text, origin, ensemble_header);
  Ensemble out;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    Defect d;
    d.id = static_cast<int>(csv.integer(i, 0));
    d.host = csv.parse(i, 1, [](const std::string& s) { return parse_host(s); });
    d.tls.location = csv.parse(i, 2, [](const std::string& s) { return parse_location(s); });
    d.tls.delta_ghz = csv.real(i, 3);
    d.tls.eps0_ghz = csv.real(i, 4);
    d.tls.dipole_enm = csv.real(i, 5);
    d.tls.dipole_cos = csv.real(i, 6);
    d.tls.deformation_ghz = csv.real(i, 7);
    d.arms.kappa_gate = csv.real(i, 8);
    d.arms.kappa_piezo = csv.real(i, 9);
    d.tls.position.u_nm = csv.real(i, 10);
    d.tls.position.v_nm = csv.real(i, 11);
    d.half_width_mhz = csv.real(i, 12);
    out.push_back(d);
  }
  return out;
}

std::string traces_to_csv(const std::vector<DefectTrace>& traces) {
  std::string out = header_line(traces_header);
  for (const DefectTrace& t : traces) {
    std::string segs;
    for (std::size_t i = 0; i < t.segments.size(); ++i) segs += (i ? ";" : "") + std::to_string(t.segments[i]);
    out += join_row({std::to_string(t.id), std::string(trace_class_name(t.cls)), std::to_string(t.points.size()), segs,
                     num(t.gate_motion_mhz), t.fit.ok ? "1" : "0", num(t.fit.delta_ghz), num(t.fit.eps0_ghz),
                     num(t.fit.kappa_gate), num(t.fit.kappa_piezo), num(t.fit.rms_mhz), t.fit.gate_free ? "1" : "0",
                     t.fit.piezo_free ? "1" : "0"});
  }
  return out;
}

std::string trace_points_to_csv(const std::vector<DefectTrace>& traces) {
  std::string out = header_line(points_header);
  for (const DefectTrace& t : traces) {
    for (const TracePoint& p : t.points) {
      out += join_row({std::to_string(t.id), std::to_string(p.segment), std::to_string(p.bias_index),
                       num(p.bias.v_gate), num(p.bias.v_piezo), num(p.freq_ghz), num(p.depth_per_us),
                       num(p.width_mhz)});
    }
  }
  return out;
}

std::vector<DefectTrace> traces_from_csv(std::string_view traces_text, std::string_view points_text,
                                         std::string_view origin) {
  const std::string o(origin);
  CsvReader tcsv(traces_text, o + " (traces)", traces_header);
  CsvReader pcsv(points_text, o + " (points)", points_header);
  std::vector<DefectTrace> out;
  std::map<int, std::size_t> index;
  std::vector<std::size_t> expected;
  auto flag = [&](std::size_t i, std::size_t c) {
    const std::string& s = tcsv.field(i, c);
    if (s != "0" && s != "1") tcsv.bad(i, c, "0 or 1");
    return s == "1";
  };
  for (std::size_t i = 0; i < tcsv.size(); ++i) {
    DefectTrace t;
    t.id = static_cast<int>(tcsv.integer(i, 0));
    t.cls = tcsv.parse(i, 1, [](const std::string& s) { return parse_trace_class(s); });
    expected.push_back(static_cast<std::size_t>(tcsv.integer(i, 2)));
    using Sep = boost::char_separator<char>;
    const std::string& segs = tcsv.field(i, 3);
    for (const std::string& s : boost::tokenizer<Sep>(segs, Sep(";"))) {
      int v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) tcsv.bad(i, 3, "a ';'-separated list of segments");
      t.segments.push_back(v);
    }
    t.gate_motion_mhz = tcsv.real(i, 4);
    t.fit.ok = flag(i, 5);
    t.fit.delta_ghz = tcsv.real(i, 6);
    t.fit.eps0_ghz = tcsv.real(i, 7);
    t.fit.kappa_gate = tcsv.real(i, 8);
    t.fit.kappa_piezo = tcsv.real(i, 9);
    t.fit.rms_mhz = tcsv.real(i, 10);
    t.fit.gate_free = flag(i, 11);
    t.fit.piezo_free = flag(i, 12);
    if (!index.emplace(t.id, out.size()).second) corrupt(origin, "duplicate trace id " + std::to_string(t.id));
    out.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < pcsv.size(); ++i) {
    const int id = static_cast<int>(pcsv.integer(i, 0));
    auto it = index.find(id);
    if (it == index.end()) corrupt(origin, "point refers to unknown trace " + std::to_string(id));
    TracePoint p;
    p.segment = static_cast<int>(pcsv.integer(i, 1));
    p.bias_index = static_cast<std::size_t>(pcsv.integer(i, 2));
    p.bias = {pcsv.real(i, 3), pcsv.real(i, 4)};
    p.freq_ghz = pcsv.real(i, 5);
    p.depth_per_us = pcsv.real(i, 6);
    p.width_mhz = pcsv.real(i, 7);
    out[it->second].points.push_back(p);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].points.size() != expected[i]) {
      corrupt(origin, "trace " + std::to_string(out[i].id) + " lists " + std::to_string(expected[i]) +
                          " points but " + std::to_string(out[i].points.size()) + " were found");
    }
  }
  return out;
}

std::string densities_to_csv(const RunDensity& density) {
  std::string out = header_line(densities_header);
  for (const SegmentDensity& d : density.segments) {
    out += join_row({std::to_string(d.segment), std::string(channel_name(d.swept)), num(d.rho_jj), num(d.rho_surf),
                     num(d.rho_nc), num(d.window_ghz)});
  }
  return out;
}

std::string run_density_to_json(const RunDensity& density) {
  json segs = json::array();
  for (const SegmentDensity& d : density.segments) {
    segs.push_back({{"segment", d.segment},
                    {"swept", channel_name(d.swept)},
                    {"rho_jj_per_ghz", d.rho_jj},
                    {"rho_surf_per_ghz", d.rho_surf},
                    {"rho_nc_per_ghz", d.rho_nc},
                    {"window_ghz", d.window_ghz}});
  }
  json j = {{"rho_jj_per_ghz", density.rho_jj},
            {"rho_surf_per_ghz", density.rho_surf},
            {"rho_nc_per_ghz", density.rho_nc},
            {"dead_fraction", density.dead_fraction},
            {"segments", segs}};
  return j.dump(2) + "\n";
}

RunDensity run_density_from_json(std::string_view text, std::string_view origin) {
  RunDensity out;
  try {
    const json j = json::parse(text);
    out.rho_jj = j.at("rho_jj_per_ghz").get<double>();
    out.rho_surf = j.at("rho_surf_per_ghz").get<double>();
    out.rho_nc = j.at("rho_nc_per_ghz").get<double>();
    out.dead_fraction = j.at("dead_fraction").get<double>();
    for (const json& s : j.at("segments")) {
      SegmentDensity d;
      d.segment = s.at("segment").get<int>();
      d.swept = parse_channel(s.at("swept").get<std::string>());
      d.rho_jj = s.at("rho_jj_per_ghz").get<double>();
      d.rho_surf = s.at("rho_surf_per_ghz").get<double>();
      d.rho_nc = s.at("rho_nc_per_ghz").get<double>();
      d.window_ghz = s.at("window_ghz").get<double>();
      out.segments.push_back(d);
    }
  } catch (const json::exception& e) {
    corrupt(origin, e.what());
  } catch (const Error& e) {
    corrupt(origin, e.what());
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCategory::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCategory::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_dataset(const std::filesystem::path& dir, const RunManifest& manifest, const std::vector<T1Map>& maps,
                   const Ensemble& truth) {
  if (maps.size() != manifest.plan.segments.size()) {
    throw Error(ErrorCategory::InvalidArgument, "one map per plan segment is required");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create " + dir.string() + ": " + ec.message());
  RunManifest m = manifest;
  m.map_files.clear();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    m.map_files.push_back(segment_file_name(i));
    write_file_atomic(dir / m.map_files.back(), t1map_to_csv(maps[i]));
  }
  write_file_atomic(dir / dataset_files::ground_truth, ensemble_to_csv(truth));
  // The manifest goes last so that a dataset with a manifest is complete.
  write_file_atomic(dir / dataset_files::manifest, manifest_to_json(m));
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  const std::filesystem::path mpath = dir / dataset_files::manifest;
  ds.manifest = manifest_from_json(read_text_file(mpath), mpath.string());
  try {
    ds.config = parse_simulation_config(ds.manifest.config_text, mpath.string() + " (config)");
  } catch (const Error& e) {
    corrupt(mpath.string(), e.what());
  }
  for (std::size_t i = 0; i < ds.manifest.map_files.size(); ++i) {
    const std::filesystem::path p = dir / ds.manifest.map_files[i];
    const Segment& seg = ds.manifest.plan.segments[i];
    T1Map map = t1map_from_csv(read_text_file(p), static_cast<int>(i), seg.swept, p.string());
    if (map.biases != seg.biases()) corrupt(p.string(), "bias points disagree with the manifest plan");
    if (map.freqs_ghz.size() != ds.manifest.plan.freqs.count) {
      corrupt(p.string(), "frequency count disagrees with the manifest plan");
    }
    ds.maps.push_back(std::move(map));
  }
  return ds;
}

Ensemble read_ground_truth(const std::filesystem::path& dir) {
  const std::filesystem::path p = dir / dataset_files::ground_truth;
  return ensemble_from_csv(read_text_file(p), p.string());
}

}  // namespace jjtls
