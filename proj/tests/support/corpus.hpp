#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqleval/sql/ast.hpp"

namespace sqleval::testing {

struct CorpusEntry {
  std::string label;
  std::string db_id;
  std::string sql;
};

inline std::vector<CorpusEntry> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<CorpusEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    CorpusEntry e;
    std::getline(fields, e.label, '\t');
    std::getline(fields, e.db_id, '\t');
    std::getline(fields, e.sql);
    out.push_back(std::move(e));
  }
  return out;
}

// Column lists of the bundled demo databases, written out by hand.
inline const sql::SchemaInfo& demo_schema(const std::string& db_id) {
  static const std::map<std::string, sql::SchemaInfo> schemas = {
      {"company",
       {{"dept", {"id", "name", "budget", "location"}},
        {"emp", {"id", "name", "email", "title", "salary", "hire_year", "dept_id", "manager_id"}},
        {"project", {"id", "name", "dept_id", "budget", "status"}},
        {"assignment", {"id", "emp_id", "project_id", "hours", "role"}}}},
      {"school",
       {{"students", {"id", "name", "age", "major", "gpa", "enrolled_year"}},
        {"teachers", {"id", "name", "dept", "salary"}},
        {"courses", {"id", "title", "teacher_id", "credits", "level"}},
        {"enrollments", {"id", "student_id", "course_id", "grade", "term"}}}},
  };
  return schemas.at(db_id);
}

}  // namespace sqleval::testing
