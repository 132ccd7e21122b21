// Command-line front end: parse, info, gen, bench, repack.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sheetreader/bench.hpp"
#include "sheetreader/engine.hpp"
#include "sheetreader/error.hpp"
#include "sheetreader/generator.hpp"
#include "sheetreader/metadata.hpp"
#include "sheetreader/parallel_deflate.hpp"

namespace sr = sheetreader;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

std::uint64_t parse_size(const std::string& text) {
  std::size_t pos = 0;
  std::uint64_t value = 0;
  try {
    value = std::stoull(text, &pos);
  } catch (const std::exception&) {
    throw CLI::ValidationError("size", "not a size: " + text);
  }
  std::string suffix = text.substr(pos);
  for (auto& c : suffix) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::uint64_t scale = 1;
  if (suffix.empty() || suffix == "B") scale = 1;
  else if (suffix == "K" || suffix == "KB" || suffix == "KIB") scale = 1ull << 10;
  else if (suffix == "M" || suffix == "MB" || suffix == "MIB") scale = 1ull << 20;
  else if (suffix == "G" || suffix == "GB" || suffix == "GIB") scale = 1ull << 30;
  else throw CLI::ValidationError("size", "unknown size suffix: " + text);
  return value * scale;
}

struct SizeOption {
  std::string text;
  std::uint64_t value(std::uint64_t fallback) const { return text.empty() ? fallback : parse_size(text); }
};

void add_size(CLI::App* app, const std::string& name, SizeOption& opt, const std::string& help) {
  app->add_option(name, opt.text, help)->check([](const std::string& s) {
    try {
      parse_size(s);
      return std::string();
    } catch (const CLI::ValidationError& e) {
      return std::string(e.what());
    }
  });
}

unsigned default_threads() {
  if (const char* env = std::getenv("SHEETREADER_THREADS")) {
    try {
      const unsigned long v = std::stoul(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring SHEETREADER_THREADS=" << env << "\n";
  }
  return 8;
}

struct ParseArgs {
  std::string file;
  std::string mode = "consecutive";
  unsigned threads = default_threads();
  unsigned parser_threads = 2;
  std::size_t ring_elements = 1024;
  SizeOption ring_element_size;
  std::string sheet;
  std::string strings = "parallel";
  bool headers = false;
  std::string output = "csv";
  std::string out;
  bool verify = false;
  bool fallback = true;
  SizeOption memory_limit;
  SizeOption boundary_interval;
  bool phase_log = false;
};

sr::EngineOptions engine_options(const ParseArgs& a) {
  sr::EngineOptions o;
  o.mode = sr::parse_mode(a.mode);
  o.threads = a.threads;
  o.parser_threads = a.parser_threads;
  o.ring_elements = a.ring_elements;
  o.ring_element_size = a.ring_element_size.value(32 * 1024);
  o.strings = sr::parse_strings_mode(a.strings);
  o.headers = a.headers;
  o.verify = a.verify;
  o.boundary_interval = a.boundary_interval.value(1 << 20);
  if (!a.memory_limit.text.empty()) {
    o.memory_budget = a.memory_limit.value(0);
  } else if (o.mode == sr::Mode::consecutive) {
    o.memory_budget = sr::available_memory();
  }
  return o;
}

void add_engine_flags(CLI::App* cmd, ParseArgs& a) {
  cmd->add_option("--mode", a.mode, "consecutive | interleaved | parallel-deflate")
      ->check(CLI::IsMember({"consecutive", "interleaved", "parallel-deflate"}));
  cmd->add_option("--threads", a.threads, "worker threads (env SHEETREADER_THREADS)")
      ->check(CLI::Range(1u, 1024u));
  cmd->add_option("--parser-threads", a.parser_threads, "interleaved parser threads")
      ->check(CLI::Range(1u, 1024u));
  cmd->add_option("--ring-elements", a.ring_elements, "interleaved ring slots")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 24));
  add_size(cmd, "--ring-element-size", a.ring_element_size, "interleaved slot size, e.g. 32KB");
  cmd->add_option("--sheet", a.sheet, "sheet name or 1-based index");
  cmd->add_option("--strings", a.strings, "parallel | sequential")
      ->check(CLI::IsMember({"parallel", "sequential"}));
  cmd->add_flag("--headers", a.headers, "treat row 1 as column names");
  cmd->add_flag("--verify", a.verify, "check CRC-32 of decompressed parts");
  add_size(cmd, "--boundary-interval", a.boundary_interval, "parallel-deflate reset interval");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw sr::Error(sr::ErrorKind::io, "cannot write " + path);
}

int run_parse(const ParseArgs& a) {
  sr::EngineOptions options = engine_options(a);
  sr::PhaseLog log;
  if (a.phase_log) options.phases = &log;
  if (options.ring_element_size == 0) throw CLI::ValidationError("--ring-element-size", "must be positive");

  sr::ColumnFrame frame;
  try {
    frame = sr::read_sheet(a.file, a.sheet, options);
  } catch (const sr::Error& e) {
    if (e.kind() != sr::ErrorKind::out_of_memory || options.mode != sr::Mode::consecutive ||
        !a.fallback)
      throw;
    std::cerr << "sheetreader: " << e.what() << "\nsheetreader: retrying in interleaved mode\n";
    options.mode = sr::Mode::interleaved;
    options.memory_budget.reset();
    frame = sr::read_sheet(a.file, a.sheet, options);
  }

  if (a.output == "csv") {
    if (a.out.empty()) {
      sr::write_csv(frame, std::cout);
      std::cout.flush();
    } else {
      std::ofstream out(a.out, std::ios::binary);
      sr::write_csv(frame, out);
      if (!out) throw sr::Error(sr::ErrorKind::io, "cannot write " + a.out);
    }
  } else if (a.output == "summary") {
    write_text(a.out, sr::summary(frame));
  }
  if (a.phase_log) {
    for (const auto& p : log.phases()) {
      std::cerr << "phase " << p.name << " " << p.start_ms << " " << p.end_ms << "\n";
    }
  }
  return 0;
}

int run_info(const std::string& file) {
  const sr::Archive archive = sr::Archive::open(file);
  const sr::WorkbookMeta meta = sr::read_metadata(archive);
  std::ostringstream out;
  out << "workbook " << meta.workbook_path << "\n";
  for (const auto& s : meta.sheets) {
    out << "sheet \"" << s.name << "\" " << s.part_path;
    if (const auto dim = sr::probe_dimension(archive, s.part_path)) {
      out << " rows=" << dim->rows << " cols=" << dim->cols;
    } else {
      out << " dimension=unknown";
    }
    out << "\n";
  }
  if (meta.shared_strings_path) {
    out << "shared-strings " << *meta.shared_strings_path;
    if (meta.shared_strings_unique_count) out << " unique=" << *meta.shared_strings_unique_count;
    out << "\n";
  } else {
    out << "shared-strings none\n";
  }
  std::cout << out.str();
  return 0;
}

struct GenArgs {
  std::string out;
  std::string spec_file;
  std::string preset = "mixed";
  std::uint64_t rows = 1000;
  std::size_t cols = 0;
  std::uint64_t seed = 1;
  double blank = -1;
  bool no_r = false;
  bool no_dimension = false;
  bool inline_strings = false;
  bool rich = false;
  bool zip64 = false;
  int level = 6;
  std::string csv;
};

int run_gen(const GenArgs& a) {
  sr::GenSpec spec;
  if (!a.spec_file.empty()) {
    std::ifstream in(a.spec_file);
    if (!in) throw sr::Error(sr::ErrorKind::io, "cannot read " + a.spec_file);
    std::stringstream buf;
    buf << in.rdbuf();
    spec = sr::GenSpec::from_json(buf.str());
  } else {
    if (a.preset == "mixed") spec = sr::GenSpec::mixed(a.rows, a.seed);
    else if (a.preset == "numeric") spec = sr::GenSpec::numeric(a.rows, a.cols ? a.cols : 100, a.seed);
    else spec = sr::GenSpec::text(a.rows, a.cols ? a.cols : 10, a.seed);
    if (a.blank >= 0) {
      for (auto& c : spec.columns) c.blank_fraction = a.blank;
    }
    spec.emit_r_attributes = !a.no_r;
    spec.emit_dimension = !a.no_dimension;
    spec.strings = a.inline_strings ? sr::StringStorage::inline_strings : sr::StringStorage::shared;
    spec.rich_text = a.rich;
    spec.force_zip64 = a.zip64;
    spec.compression_level = a.level;
  }
  sr::GenOptions options;
  options.keep_csv = !a.csv.empty();
  const sr::GenResult result = sr::generate_xlsx(spec, a.out, options);
  if (!a.csv.empty()) write_text(a.csv, result.csv);
  std::cerr << "wrote " << a.out << " rows=" << result.extent.rows << " cols=" << result.extent.cols
            << " cells=" << result.cells << "\n";
  return 0;
}

struct BenchArgs {
  std::vector<std::string> files;
  std::vector<std::string> modes = {"consecutive", "interleaved"};
  std::vector<unsigned> threads;
  ParseArgs engine;
  unsigned repeats = 5;
  unsigned sample_ms = 50;
  std::string out;
  bool caches_cleared = false;
};

int run_bench(BenchArgs& a) {
  std::vector<sr::BenchConfig> matrix;
  const sr::EngineOptions base = engine_options(a.engine);
  for (const auto& file : a.files) {
    for (const auto& mode : a.modes) {
      std::vector<unsigned> sweep = a.threads;
      if (sweep.empty()) {
        sweep.push_back(mode == "interleaved" ? base.parser_threads : base.threads);
      }
      for (const unsigned t : sweep) {
        sr::BenchConfig c;
        c.file = file;
        c.sheet = a.engine.sheet;
        c.options = base;
        c.options.memory_budget.reset();
        c.options.mode = sr::parse_mode(mode);
        if (c.options.mode == sr::Mode::interleaved) c.options.parser_threads = t;
        else c.options.threads = t;
        c.id = std::filesystem::path(file).filename().string() + ":" + mode + ":" + std::to_string(t);
        matrix.push_back(std::move(c));
      }
    }
  }
  sr::BenchSettings settings;
  settings.repeats = a.repeats;
  settings.sample_period_ms = a.sample_ms;
  settings.caches_cleared = a.caches_cleared;
  std::error_code ec;
  const auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) settings.executable = self;
  const sr::BenchReport report = sr::run_benchmark(matrix, settings);
  if (a.out.empty()) sr::emit_report(report, std::cout);
  else sr::emit_report(report, std::filesystem::path(a.out));
  return 0;
}

int run_repack(const std::string& in, const std::string& out, const std::string& sheet,
               std::uint64_t interval, int level) {
  const sr::Archive archive = sr::Archive::open(in);
  const sr::WorkbookMeta meta = sr::read_metadata(archive);
  const std::string part = sr::select_sheet(meta, sheet).part_path;
  const sr::BoundaryIndex index = sr::repack_entry(in, part, interval, out, level);
  write_sidecar(index, sr::sidecar_path(out));
  std::cerr << "wrote " << out << " and " << sr::sidecar_path(out).string() << " ("
            << index.boundaries.size() << " boundaries)\n";
  return 0;
}

int run_bench_child(const std::string& config_json) {
  return sr::bench_child_main(sr::config_from_json(config_json), 3);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel XLSX worksheet reader"};
  app.require_subcommand(1);

  ParseArgs parse;
  auto* parse_cmd = app.add_subcommand("parse", "parse a worksheet into CSV or a summary");
  parse_cmd->add_option("file", parse.file, "XLSX file")->required();
  add_engine_flags(parse_cmd, parse);
  parse_cmd->add_option("--output", parse.output, "csv | summary | none")
      ->check(CLI::IsMember({"csv", "summary", "none"}));
  parse_cmd->add_option("--out", parse.out, "write output here instead of stdout");
  parse_cmd->add_flag("--fallback,!--no-fallback", parse.fallback,
                      "retry in interleaved mode when the document does not fit in memory");
  add_size(parse_cmd, "--memory-limit", parse.memory_limit,
           "memory budget for consecutive mode (default: available memory)");
  parse_cmd->add_flag("--phase-log", parse.phase_log, "print phase timestamps to stderr");

  std::string info_file;
  auto* info_cmd = app.add_subcommand("info", "list sheets, dimensions and shared-string count");
  info_cmd->add_option("file", info_file, "XLSX file")->required();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic workbook");
  gen_cmd->add_option("out", gen.out, "output XLSX path")->required();
  gen_cmd->add_option("--spec", gen.spec_file, "JSON generator spec (overrides other flags)");
  gen_cmd->add_option("--preset", gen.preset, "mixed | numeric | text")
      ->check(CLI::IsMember({"mixed", "numeric", "text"}));
  gen_cmd->add_option("--rows", gen.rows, "data rows");
  gen_cmd->add_option("--cols", gen.cols, "columns (numeric and text presets)");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--blank", gen.blank, "blank fraction for every column")->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_flag("--no-r", gen.no_r, "omit cell and row r attributes");
  gen_cmd->add_flag("--no-dimension", gen.no_dimension, "omit the dimension element");
  gen_cmd->add_flag("--inline-strings", gen.inline_strings, "inline strings instead of a shared table");
  gen_cmd->add_flag("--rich", gen.rich, "include markup, quotes, commas, newlines and UTF-8 in text");
  gen_cmd->add_flag("--zip64", gen.zip64, "write ZIP64 records");
  gen_cmd->add_option("--level", gen.level, "deflate level")->check(CLI::Range(0, 9));
  gen_cmd->add_option("--csv", gen.csv, "also write the ground-truth CSV");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "benchmark files in child processes");
  bench_cmd->add_option("files", bench.files, "XLSX files")->required();
  bench_cmd->add_option("--modes", bench.modes, "modes to run")->delimiter(',');
  bench_cmd->add_option("--sweep", bench.threads, "thread counts to sweep")->delimiter(',');
  add_engine_flags(bench_cmd, bench.engine);
  bench_cmd->add_option("--repeats", bench.repeats, "repetitions per configuration")
      ->check(CLI::Range(1u, 1000u));
  bench_cmd->add_option("--sample-ms", bench.sample_ms, "memory sampling period")
      ->check(CLI::Range(1u, 60000u));
  bench_cmd->add_option("--out", bench.out, "report CSV path");
  bench_cmd->add_flag("--caches-cleared", bench.caches_cleared,
                      "record that OS caches were dropped before the run");

  std::string repack_in, repack_out, repack_sheet;
  SizeOption repack_interval;
  int repack_level = 6;
  auto* repack_cmd =
      app.add_subcommand("repack", "recompress a worksheet with reset points for parallel inflation");
  repack_cmd->add_option("input", repack_in, "source XLSX")->required();
  repack_cmd->add_option("output", repack_out, "destination XLSX")->required();
  repack_cmd->add_option("--sheet", repack_sheet, "sheet name or 1-based index");
  add_size(repack_cmd, "--boundary-interval", repack_interval, "uncompressed bytes between resets");
  repack_cmd->add_option("--level", repack_level, "deflate level")->check(CLI::Range(0, 9));

  std::string child_config;
  auto* child_cmd = app.add_subcommand("bench-child", "");
  child_cmd->group("");
  child_cmd->add_option("config", child_config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*parse_cmd) return run_parse(parse);
    if (*info_cmd) return run_info(info_file);
    if (*gen_cmd) return run_gen(gen);
    if (*bench_cmd) {
      for (const auto& m : bench.modes) sr::parse_mode(m);
      return run_bench(bench);
    }
    if (*repack_cmd) {
      const std::uint64_t interval = repack_interval.value(1 << 20);
      if (interval == 0) throw CLI::ValidationError("--boundary-interval", "must be positive");
      return run_repack(repack_in, repack_out, repack_sheet, interval, repack_level);
    }
    if (*child_cmd) return run_bench_child(child_config);
  } catch (const CLI::Error& e) {
    std::cerr << "sheetreader: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "sheetreader: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "sheetreader: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}
