#pragma once

#include "biphoton/eventsim.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

// File formats. Numbers are written in shortest round-trip form so reruns
// are byte-identical.
namespace biphoton {

std::string format_number(double v);
std::string format_number(std::int64_t v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::initializer_list<std::string_view> header);
  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(std::string_view v);
  void end_row();
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  std::string line_;
};

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// {"value": v, "error": e, "unit": u}
nlohmann::json tagged(double value, std::string_view unit);
nlohmann::json tagged(double value, double error, std::string_view unit);

struct TaggedValue {
  double value = 0.0;
  double error = 0.0;
};

// Reads j[key] and requires its unit tag to equal `unit` exactly; "Hz" is
// refused where "rad/s" is expected. `where` prefixes diagnostics.
TaggedValue read_tagged(const nlohmann::json& j, const std::string& key, std::string_view unit,
                        const std::string& where, bool need_error = false);

// events.csv (channel,t_ns) plus a JSON sidecar next to it.
void write_event_stream(const std::string& csv_path, const EventStream& stream, const std::string& config_hash);
EventStream read_event_stream(const std::string& csv_path);
std::string sidecar_path(const std::string& csv_path);

// FNV-1a 64 of a file's bytes.
std::uint64_t file_hash(const std::string& path);

}  // namespace biphoton
