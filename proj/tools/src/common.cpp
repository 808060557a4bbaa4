#include "common.hpp"

#include <filesystem>
#include <iostream>

#include "docparse/errors.hpp"

namespace docparse::cli {

Input::Input(const std::string& path) : in_(&std::cin) {
  if (path == "-") return;
  file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file_) throw ConfigError("cannot open " + path);
  in_ = file_.get();
}

Output::Output(const std::string& path) : out_(&std::cout) {
  if (path.empty() || path == "-") return;
  file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*file_) throw ConfigError("cannot write " + path);
  out_ = file_.get();
}

void write_json(const std::string& path, const Json& value) {
  Output out(path);
  out.stream() << value.dump(2) << '\n';
  out.stream().flush();
  if (!out.stream()) throw Error("failed writing " + (path.empty() ? std::string("stdout") : path));
}

std::string resolve_path(const std::string& path) {
  if (path.empty() || path == "-") return path;
  return std::filesystem::absolute(path).lexically_normal().string();
}

}  // namespace docparse::cli
