#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sheetreader/engine.hpp"
#include "sheetreader/error.hpp"
#include "sheetreader/parallel_deflate.hpp"

namespace py = pybind11;
using namespace sheetreader;

namespace {

py::list column_values(const Column& c) {
  py::list out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c.valid(i)) {
      out[i] = py::none();
      continue;
    }
    switch (c.type) {
      case ColumnType::boolean: out[i] = py::bool_(c.boolean(i)); break;
      case ColumnType::integer: out[i] = py::int_(c.integer(i)); break;
      case ColumnType::real:
      case ColumnType::date: out[i] = py::float_(c.real(i)); break;  // dates stay serial numbers here
      case ColumnType::string: out[i] = py::str(c.string(i).data(), c.string(i).size()); break;
      case ColumnType::empty: out[i] = py::none(); break;
    }
  }
  return out;
}

py::dict read_frame(const std::string& path, const std::string& sheet, const std::string& mode, unsigned threads,
              unsigned parser_threads, bool headers, const std::string& strings) {
  EngineOptions o;
  o.mode = parse_mode(mode);
  o.threads = threads;
  o.parser_threads = parser_threads;
  o.headers = headers;
  o.strings = parse_strings_mode(strings);
  ColumnFrame frame;
  {
    py::gil_scoped_release unlocked;
    frame = read_sheet(path, sheet, o);
  }
  py::list names, types, columns;
  for (const Column& c : frame.columns) {
    names.append(c.name);
    types.append(std::string(to_string(c.type)));
    columns.append(column_values(c));
  }
  py::dict out;
  out["rows"] = frame.n_rows;
  out["names"] = names;
  out["types"] = types;
  out["columns"] = columns;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<Error>(m, "ParseError", PyExc_ValueError);
  m.def("read_sheet", &read_frame, py::arg("path"), py::arg("sheet") = "", py::arg("mode") = "consecutive",
        py::arg("threads") = 8, py::arg("parser_threads") = 2, py::arg("headers") = false,
        py::arg("strings") = "parallel");
  m.def("to_csv", [](const std::string& path, const std::string& sheet, const std::string& mode, unsigned threads) {
    EngineOptions o;
    o.mode = parse_mode(mode);
    o.threads = threads;
    std::string csv;
    {
      py::gil_scoped_release unlocked;
      csv = to_csv(read_sheet(path, sheet, o));
    }
    return py::bytes(csv);
  }, py::arg("path"), py::arg("sheet") = "", py::arg("mode") = "consecutive", py::arg("threads") = 8);
}
