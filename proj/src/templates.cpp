#include "revgen/templates.hpp"

#include <fstream>
#include <sstream>

#include "builtin_templates.hpp"
#include "revgen/error.hpp"

namespace revgen {
namespace {

std::string strip_final_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

}  // namespace

std::string render_template(std::string_view tmpl, const TemplateVars& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw TemplateError("unterminated placeholder");
    out.append(tmpl.substr(pos, open - pos));
    const std::string name(tmpl.substr(open + 2, close - open - 2));
    auto it = vars.find(name);
    if (it == vars.end()) throw TemplateError("unbound placeholder {{" + name + "}}");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = [] {
    TemplateSet s;
    for (const auto& [name, content] : detail::builtin_templates())
      s.templates_[name] = strip_final_newline(content);
    return s;
  }();
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet s = builtin();
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw ConfigError("no template directory " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    s.templates_[entry.path().stem().string()] = strip_final_newline(buf.str());
  }
  return s;
}

const std::string& TemplateSet::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw TemplateError("unknown template " + name);
  return it->second;
}

std::string TemplateSet::render(const std::string& name, const TemplateVars& vars) const {
  return render_template(get(name), vars);
}

void TemplateSet::set(const std::string& name, std::string content) {
  templates_[name] = std::move(content);
}

}  // namespace revgen
