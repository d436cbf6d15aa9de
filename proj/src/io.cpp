#include "biphoton/io.hpp"

#include <algorithm>
#include "biphoton/errors.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iterator>
#include <sstream>

namespace biphoton {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_number(std::int64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, std::initializer_list<std::string_view> header)
    : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw Error("cannot write '" + path + "'");
  for (const auto h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_number(v))); }

CsvWriter& CsvWriter::cell(std::int64_t v) { return cell(std::string_view(format_number(v))); }

CsvWriter& CsvWriter::cell(std::string_view v) {
  if (!line_.empty()) line_ += ',';
  line_ += v;
  return *this;
}

void CsvWriter::end_row() {
  line_ += '\n';
  out_ << line_;
  line_.clear();
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw Error("failed writing '" + path_ + "'");
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

nlohmann::json tagged(double value, std::string_view unit) {
  return {{"value", value}, {"unit", std::string(unit)}};
}

nlohmann::json tagged(double value, double error, std::string_view unit) {
  return {{"value", value}, {"error", error}, {"unit", std::string(unit)}};
}

TaggedValue read_tagged(const nlohmann::json& j, const std::string& key, std::string_view unit,
                        const std::string& where, bool need_error) {
  const std::string field = where + ": " + key;
  if (!j.is_object() || !j.contains(key)) throw ValidationError(field + " is missing");
  const auto& v = j.at(key);
  if (!v.is_object() || !v.contains("value") || !v.contains("unit"))
    throw ValidationError(field + " must be an object with \"value\" and \"unit\"");
  if (!v.at("unit").is_string()) throw ValidationError(field + ".unit must be a string");
  const auto u = v.at("unit").get<std::string>();
  if (u != unit)
    throw ValidationError(field + ".unit is '" + u + "', expected '" + std::string(unit) + "'" +
                          (u == "Hz" || u == "kHz" || u == "MHz" ? " (angular frequencies are rad/s)" : ""));
  if (!v.at("value").is_number()) throw ValidationError(field + ".value must be a number");
  TaggedValue out{v.at("value").get<double>(), 0.0};
  if (v.contains("error")) {
    if (!v.at("error").is_number()) throw ValidationError(field + ".error must be a number");
    out.error = v.at("error").get<double>();
  } else if (need_error) {
    throw ValidationError(field + ".error is missing");
  }
  return out;
}

std::string sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

void write_event_stream(const std::string& csv_path, const EventStream& stream, const std::string& config_hash) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw Error("cannot write '" + csv_path + "'");
    std::string buf = "channel,t_ns\n";
    buf.reserve(stream.events.size() * 20 + 16);
    char num[32];
    for (const auto& e : stream.events) {
      buf += channel_name(e.channel);
      buf += ',';
      const auto res = std::to_chars(num, num + sizeof num, e.t_ns);
      buf.append(num, res.ptr);
      buf += '\n';
    }
    out << buf;
    if (!out) throw Error("failed writing '" + csv_path + "'");
  }
  nlohmann::json meta;
  meta["seed"] = stream.seed;
  meta["config_hash"] = config_hash;
  meta["run_length"] = tagged(stream.run_length, "s");
  meta["cycle_period"] = tagged(stream.duty.cycle_period, "s");
  meta["generation_window"] = tagged(stream.duty.generation_window, "s");
  meta["joint_efficiency"] = stream.joint_efficiency;
  meta["events"] = stream.events.size();
  write_json(sidecar_path(csv_path), meta);
}

EventStream read_event_stream(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open event stream '" + csv_path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  EventStream s;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "channel,t_ns") throw ValidationError(csv_path + ": header must be 'channel,t_ns'");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ValidationError(csv_path + ":" + std::to_string(line_no) + ": expected 2 columns");
    DetectionEvent e;
    try {
      e.channel = parse_channel(line.substr(0, comma));
    } catch (const ValidationError&) {
      throw ValidationError(csv_path + ":" + std::to_string(line_no) + ": unknown channel");
    }
    const auto num = line.substr(comma + 1);
    const auto res = std::from_chars(num.data(), num.data() + num.size(), e.t_ns);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size())
      throw ValidationError(csv_path + ":" + std::to_string(line_no) + ": bad timestamp");
    s.events.push_back(e);
  }
  if (!std::is_sorted(s.events.begin(), s.events.end())) std::sort(s.events.begin(), s.events.end());

  const std::string meta_path = sidecar_path(csv_path);
  if (std::filesystem::exists(meta_path)) {
    const auto meta = read_json(meta_path);
    const std::string where = meta_path;
    s.seed = meta.value("seed", std::uint64_t{0});
    s.run_length = read_tagged(meta, "run_length", "s", where).value;
    s.duty.cycle_period = read_tagged(meta, "cycle_period", "s", where).value;
    s.duty.generation_window = read_tagged(meta, "generation_window", "s", where).value;
    s.joint_efficiency = meta.value("joint_efficiency", 1.0);
  } else {
    // Bare time-tagger export: one continuous window.
    const double last = s.events.empty() ? 0.0 : static_cast<double>(s.events.back().t_ns + 1) * 1e-9;
    s.run_length = std::max(last, 1e-9);
    s.duty.cycle_period = s.run_length;
    s.duty.generation_window = s.run_length;
  }
  return s;
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace biphoton
