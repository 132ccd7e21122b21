#pragma once

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path scratch_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("sheetreader-unit-" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

inline std::filesystem::path scratch(const std::string& name) { return scratch_dir() / name; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  out << data;
}

/// Runs a Python snippet with the interpreter found at configure time; returns its stdout.
inline std::string run_python(const std::string& code, int* status = nullptr) {
  static int counter = 0;
  const auto script = scratch("snippet" + std::to_string(counter++) + ".py");
  write_file(script, code);
  const std::string cmd = std::string(SHEETREADER_PYTHON) + " " + script.string();
  FILE* pipe = ::popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int rc = ::pclose(pipe);
  if (status) *status = rc;
  return out;
}

/// Splits [0, size) into random windows of 1..max_len bytes.
inline std::vector<std::size_t> random_cuts(std::size_t size, std::size_t max_len, std::mt19937_64& rng) {
  std::vector<std::size_t> cuts;
  std::size_t pos = 0;
  while (pos < size) {
    pos = std::min(size, pos + 1 + rng() % max_len);
    cuts.push_back(pos);
  }
  return cuts;
}

}  // namespace testing
