#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "sliceplan/errors.hpp"
#include "sliceplan/perf_model.hpp"

namespace sliceplan {

using nlohmann::json;

namespace {

constexpr std::string_view kCsvHeader = "op_class,workload_n,elapsed_s";

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
  throw Error(Errc::SchemaViolation, path + ": " + msg);
}

const json& child(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "/" + key, "missing");
  return *it;
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = child(obj, key, path);
  if (!v.is_number()) schema_error(path + "/" + key, "expected number");
  return v.get<double>();
}

double nonneg(const json& obj, const std::string& key, const std::string& path) {
  double v = number(obj, key, path);
  if (!(v >= 0.0)) schema_error(path + "/" + key, "must be >= 0");
  return v;
}

PerfCoeffs linear_from_json(const json& j, const std::string& path) {
  return PerfCoeffs{nonneg(j, "alpha", path), nonneg(j, "beta", path), number(j, "r2", path)};
}

json linear_to_json(const PerfCoeffs& c) {
  return json{{"alpha", c.alpha}, {"beta", c.beta}, {"r2", c.fit_quality}};
}

}  // namespace

HardwareProfile profile_from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error("", std::string("invalid JSON (") + e.what() + ")");
  }
  if (!j.is_object()) schema_error("", "expected object");

  HardwareProfile p;
  const json& tb = child(j, "testbed", "");
  if (!tb.is_string()) schema_error("/testbed", "expected string");
  p.testbed = tb.get<std::string>();

  if (j.contains("launch")) {
    const json& l = j["launch"];
    p.launch = PerfCoeffs{nonneg(l, "alpha", "/launch"), 0.0, nonneg(l, "sigma2", "/launch")};
  }
  if (j.contains("pcie")) p.pcie = linear_from_json(j["pcie"], "/pcie");
  if (j.contains("gemm")) {
    const json& g = j["gemm"];
    if (!g.is_object()) schema_error("/gemm", "expected object");
    for (const auto& [key, val] : g.items()) {
      const std::string path = "/gemm/" + key;
      Precision prec;
      try {
        prec = parse_precision(key);
      } catch (const Error&) {
        schema_error(path, "unknown precision");
      }
      if (!val.is_object()) schema_error(path, "expected object");
      GemmCoeffs gc;
      if (val.contains("gpu")) gc.gpu = linear_from_json(val["gpu"], path + "/gpu");
      if (val.contains("cpu")) gc.cpu = linear_from_json(val["cpu"], path + "/cpu");
      p.gemm[prec] = gc;
    }
  }
  return p;
}

HardwareProfile load_profile(std::istream& in) {
  std::stringstream ss;
  ss << in.rdbuf();
  return profile_from_json_text(ss.str());
}

HardwareProfile load_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::SchemaViolation, path + ": cannot open");
  return load_profile(in);
}

std::string save_profile(const HardwareProfile& p) {
  json j;
  j["schema_version"] = 1;
  j["testbed"] = p.testbed;
  if (p.launch) j["launch"] = json{{"alpha", p.launch->alpha}, {"sigma2", p.launch->fit_quality}};
  if (p.pcie) j["pcie"] = linear_to_json(*p.pcie);
  if (!p.gemm.empty()) {
    json g = json::object();
    for (const auto& [prec, gc] : p.gemm) {
      json entry = json::object();
      if (gc.gpu) entry["gpu"] = linear_to_json(*gc.gpu);
      if (gc.cpu) entry["cpu"] = linear_to_json(*gc.cpu);
      g[std::string(to_string(prec))] = entry;
    }
    j["gemm"] = g;
  }
  return j.dump(2) + "\n";
}

std::string profile_hash(const HardwareProfile& profile) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : save_profile(profile)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Sample CSV

std::string sample_class_name(const ProfileSample& s) {
  std::string name(to_string(s.op));
  if (s.op == OpClass::GpuGemm || s.op == OpClass::CpuGemm) {
    name += "_";
    name += to_string(s.precision);
  }
  return name;
}

namespace {

ProfileSample parse_class(std::string_view tok, std::size_t line) {
  ProfileSample s;
  auto gemm = [&](OpClass op, std::string_view rest) {
    s.op = op;
    if (rest.empty()) {
      s.precision = Precision::FP16;
    } else if (rest == "_fp16") {
      s.precision = Precision::FP16;
    } else if (rest == "_int4") {
      s.precision = Precision::INT4;
    } else {
      schema_error("line " + std::to_string(line), "unknown op_class '" + std::string(tok) + "'");
    }
  };
  if (tok.starts_with("gpu_gemm")) {
    gemm(OpClass::GpuGemm, tok.substr(8));
  } else if (tok.starts_with("cpu_gemm")) {
    gemm(OpClass::CpuGemm, tok.substr(8));
  } else if (tok == "c2g" || tok == "pcie") {
    s.op = OpClass::C2G;
  } else if (tok == "launch") {
    s.op = OpClass::Launch;
  } else {
    schema_error("line " + std::to_string(line), "unknown op_class '" + std::string(tok) + "'");
  }
  return s;
}

double parse_double(std::string_view tok, std::size_t line, std::string_view column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    schema_error("line " + std::to_string(line) + "/" + std::string(column),
                 "not a number: '" + std::string(tok) + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<ProfileSample> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    schema_error("line 1", "empty input, missing header '" + std::string(kCsvHeader) + "'");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    schema_error("line 1", "expected header '" + std::string(kCsvHeader) + "', got '" + line + "'");
  }

  std::vector<ProfileSample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view sv(line);
    auto c1 = sv.find(',');
    auto c2 = c1 == std::string_view::npos ? c1 : sv.find(',', c1 + 1);
    if (c2 == std::string_view::npos || sv.find(',', c2 + 1) != std::string_view::npos) {
      schema_error("line " + std::to_string(lineno), "expected 3 columns");
    }
    ProfileSample s = parse_class(sv.substr(0, c1), lineno);
    s.workload_n = parse_double(sv.substr(c1 + 1, c2 - c1 - 1), lineno, "workload_n");
    s.elapsed_s = parse_double(sv.substr(c2 + 1), lineno, "elapsed_s");
    if (!(s.elapsed_s > 0.0)) schema_error("line " + std::to_string(lineno) + "/elapsed_s", "must be > 0");
    if (!(s.workload_n >= 0.0)) schema_error("line " + std::to_string(lineno) + "/workload_n", "must be >= 0");
    if (s.op == OpClass::Launch && s.workload_n != 1.0) {
      schema_error("line " + std::to_string(lineno) + "/workload_n", "launch samples must have workload_n = 1");
    }
    out.push_back(s);
  }
  return out;
}

void write_samples_csv(std::ostream& out, std::span<const ProfileSample> samples) {
  out << kCsvHeader << '\n';
  for (const auto& s : samples) {
    out << sample_class_name(s) << ',' << format_double(s.workload_n) << ','
        << format_double(s.elapsed_s) << '\n';
  }
}

}  // namespace sliceplan
