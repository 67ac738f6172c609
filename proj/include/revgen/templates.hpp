#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace revgen {

using TemplateVars = std::map<std::string, std::string>;

/// Substitutes `{{name}}` placeholders in one pass; substituted values are not
/// rescanned. An unbound placeholder raises TemplateError.
std::string render_template(std::string_view tmpl, const TemplateVars& vars);

/// Named prompt templates. Starts from the compiled-in copies of
/// templates/*.txt; `load` overrides any of them from a directory.
class TemplateSet {
 public:
  static const TemplateSet& builtin();
  static TemplateSet load(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;
  std::string render(const std::string& name, const TemplateVars& vars) const;
  void set(const std::string& name, std::string content);

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace revgen
