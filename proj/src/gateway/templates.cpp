// Question/SQL templates behind the mock_template adapter. "{n}" is replaced
// by attempt + 1; several alternatives rotate with the attempt number.

#include "sqleval/gateway/templates.hpp"

namespace sqleval::gateway::detail {

namespace {

const std::vector<TemplateEntry> kTemplates = {
    // company
    {"company", "1.1", "List every row of a table ({n}).",
     {"SELECT * FROM dept", "SELECT * FROM emp", "SELECT * FROM project", "SELECT * FROM assignment"}},
    {"company", "1.2", "Show two columns of a table ({n}).",
     {"SELECT name, budget FROM dept", "SELECT name, email FROM emp", "SELECT name, status FROM project",
      "SELECT emp_id, hours FROM assignment", "SELECT name, hire_year FROM emp", "SELECT title, salary FROM emp",
      "SELECT name, location FROM dept", "SELECT project_id, role FROM assignment"}},
    {"company", "1.3", "Which employees earn more than {n}000?", {"SELECT name, salary FROM emp WHERE salary > {n}000"}},
    {"company", "1.4", "Employees of department {n} hired after 2015.",
     {"SELECT name FROM emp WHERE dept_id = {n} AND hire_year > 2015"}},
    {"company", "1.5", "Employees with a salary between {n}000 and 90000.",
     {"SELECT name FROM emp WHERE salary BETWEEN {n}000 AND 90000"}},
    {"company", "1.6", "The {n} best paid employees.", {"SELECT name, salary FROM emp ORDER BY salary DESC LIMIT {n}"}},
    {"company", "2.1", "How many employees earn more than {n}000?", {"SELECT COUNT(*) FROM emp WHERE salary > {n}000"}},
    {"company", "2.2", "Distinct titles among employees earning more than {n}000.",
     {"SELECT DISTINCT title FROM emp WHERE salary > {n}000"}},
    {"company", "2.3", "Per department, how many employees earn more than {n}000?",
     {"SELECT dept_id, COUNT(*) FROM emp WHERE salary > {n}000 GROUP BY dept_id"}},
    {"company", "2.4", "Employee counts per department and title above a salary of {n}000.",
     {"SELECT dept_id, title, COUNT(*) FROM emp WHERE salary > {n}000 GROUP BY dept_id, title"}},
    {"company", "2.5", "Departments with more than {n} employees.",
     {"SELECT dept_id FROM emp GROUP BY dept_id HAVING COUNT(*) > {n}"}},
    {"company", "2.6", "Average salary per department plus {n}.",
     {"SELECT dept_id, AVG(salary) + {n} FROM emp GROUP BY dept_id"}},
    {"company", "3.1", "Employee and department names for salaries above {n}000.",
     {"SELECT e.name, d.name FROM emp e JOIN dept d ON e.dept_id = d.id WHERE e.salary > {n}000"}},
    {"company", "3.2", "Employees and their projects where they work more than {n} hours.",
     {"SELECT e.name, p.name FROM emp e JOIN assignment a ON a.emp_id = e.id JOIN project p ON p.id = a.project_id "
      "WHERE a.hours > {n}"}},
    {"company", "3.3", "Departments with budget above {n}000 and their projects, if any.",
     {"SELECT d.name, p.name FROM dept d LEFT JOIN project p ON p.dept_id = d.id WHERE d.budget > {n}000"}},
    {"company", "3.4", "Employees earning above {n}000 and their managers.",
     {"SELECT e1.name, e2.name FROM emp e1 JOIN emp e2 ON e1.manager_id = e2.id WHERE e1.salary > {n}000"}},
    {"company", "3.5", "Per department name, the number of employees earning above {n}000.",
     {"SELECT d.name, COUNT(*) FROM emp e JOIN dept d ON e.dept_id = d.id WHERE e.salary > {n}000 GROUP BY d.name"}},
    {"company", "3.6", "Employees whose salary exceeds a project budget plus {n}000.",
     {"SELECT e.name, p.name FROM emp e JOIN project p ON e.salary > p.budget + {n}000"}},
    {"company", "4.1", "Employees earning more than the average salary plus {n}.",
     {"SELECT name FROM emp WHERE salary > (SELECT AVG(salary) FROM emp) + {n}"}},
    {"company", "4.2", "Employees assigned somewhere for more than {n} hours.",
     {"SELECT name FROM emp WHERE id IN (SELECT emp_id FROM assignment WHERE hours > {n})"}},
    {"company", "4.3", "Departments running a project with budget above {n}000.",
     {"SELECT name FROM dept d WHERE EXISTS (SELECT 1 FROM project p WHERE p.dept_id = d.id AND p.budget > {n}000)"}},
    {"company", "4.4", "Employees earning more than every project budget in department {n}.",
     {"SELECT name FROM emp WHERE salary > ALL (SELECT budget FROM project WHERE dept_id = {n})"}},
    {"company", "4.5", "Names from the set of employees earning above {n}000.",
     {"SELECT x.name FROM (SELECT name, salary FROM emp WHERE salary > {n}000) x"}},
    {"company", "4.6", "Each employee with the number of assignments longer than {n} hours.",
     {"SELECT name, (SELECT COUNT(*) FROM assignment a WHERE a.emp_id = e.id AND a.hours > {n}) FROM emp e"}},
    {"company", "5.1", "Names of employees in department {n} together with all project names.",
     {"SELECT name FROM emp WHERE dept_id = {n} UNION SELECT name FROM project"}},
    {"company", "5.2", "Departments that have projects and employees earning above {n}000.",
     {"SELECT dept_id FROM emp WHERE salary > {n}000 INTERSECT SELECT dept_id FROM project"}},
    {"company", "5.3", "Departments without a project above {n}000.",
     {"SELECT id FROM dept EXCEPT SELECT dept_id FROM project WHERE budget > {n}000"}},
    {"company", "5.4", "Label employees as high or low earners around {n}000.",
     {"SELECT name, CASE WHEN salary > {n}000 THEN 'high' ELSE 'low' END FROM emp"}},
    {"company", "5.5", "Names of employees earning above {n}000, via a named subquery.",
     {"WITH rich AS (SELECT name, salary FROM emp WHERE salary > {n}000) SELECT name FROM rich"}},
    {"company", "5.6", "Departments without projects over {n}000, via two named subqueries.",
     {"WITH a AS (SELECT id FROM dept), b AS (SELECT dept_id FROM project WHERE budget > {n}000) "
      "SELECT id FROM a EXCEPT SELECT dept_id FROM b"}},
    {"company", "6.1", "Rank employees above {n}000 by salary.",
     {"SELECT name, RANK() OVER (ORDER BY salary DESC) FROM emp WHERE salary > {n}000"}},
    {"company", "6.2", "Running salary total by hire year for salaries above {n}000.",
     {"SELECT name, SUM(salary) OVER (ORDER BY hire_year) FROM emp WHERE salary > {n}000"}},
    {"company", "6.3", "Rank employees above {n}000 within their department.",
     {"SELECT name, RANK() OVER (PARTITION BY dept_id ORDER BY salary DESC) FROM emp WHERE salary > {n}000"}},
    {"company", "6.4", "Salary sum over the previous {n} hires and the current one.",
     {"SELECT name, SUM(salary) OVER (ORDER BY hire_year ROWS BETWEEN {n} PRECEDING AND CURRENT ROW) FROM emp"}},
    {"company", "6.5", "The management chain above employee {n}0.",
     {"WITH RECURSIVE chain(id, manager_id) AS (SELECT id, manager_id FROM emp WHERE id = {n}0 UNION ALL "
      "SELECT e.id, e.manager_id FROM emp e JOIN chain c ON e.id = c.manager_id) SELECT id FROM chain"}},
    {"company", "6.6", "The {n} top earners by salary rank.",
     {"SELECT name FROM (SELECT name, RANK() OVER (ORDER BY salary DESC) AS r FROM emp) t WHERE t.r <= {n}"}},

    // school
    {"school", "1.1", "List every row of a table ({n}).",
     {"SELECT * FROM students", "SELECT * FROM teachers", "SELECT * FROM courses", "SELECT * FROM enrollments"}},
    {"school", "1.2", "Show two columns of a table ({n}).",
     {"SELECT name, age FROM students", "SELECT title, credits FROM courses", "SELECT name, dept FROM teachers",
      "SELECT student_id, grade FROM enrollments", "SELECT name, major FROM students", "SELECT title, level FROM courses",
      "SELECT name, salary FROM teachers", "SELECT course_id, term FROM enrollments"}},
    {"school", "1.3", "Students older than 1{n}.", {"SELECT name FROM students WHERE age > 1{n}"}},
    {"school", "1.4", "Students older than 1{n} with a GPA below 3.5.",
     {"SELECT name FROM students WHERE age > 1{n} AND gpa < 3.5"}},
    {"school", "1.5", "Students aged between 1{n} and 40.", {"SELECT name FROM students WHERE age BETWEEN 1{n} AND 40"}},
    {"school", "1.6", "The {n} students with the highest GPA.",
     {"SELECT name, gpa FROM students ORDER BY gpa DESC LIMIT {n}"}},
    {"school", "2.1", "Average GPA of students older than 1{n}.", {"SELECT AVG(gpa) FROM students WHERE age > 1{n}"}},
    {"school", "2.2", "Distinct majors among students older than 1{n}.",
     {"SELECT DISTINCT major FROM students WHERE age > 1{n}"}},
    {"school", "2.3", "Students older than 1{n} per major.",
     {"SELECT major, COUNT(*) FROM students WHERE age > 1{n} GROUP BY major"}},
    {"school", "2.4", "Students older than 1{n} per major and enrollment year.",
     {"SELECT major, enrolled_year, COUNT(*) FROM students WHERE age > 1{n} GROUP BY major, enrolled_year"}},
    {"school", "2.5", "Majors with more than {n} students.",
     {"SELECT major FROM students GROUP BY major HAVING COUNT(*) > {n}"}},
    {"school", "2.6", "Average GPA per major rounded to {n} digits.",
     {"SELECT major, ROUND(AVG(gpa), {n}) FROM students GROUP BY major"}},
    {"school", "3.1", "Students and their grades above {n}.",
     {"SELECT s.name, e.grade FROM students s JOIN enrollments e ON s.id = e.student_id WHERE e.grade > {n}"}},
    {"school", "3.2", "Students and the titles of courses worth more than {n} credits.",
     {"SELECT s.name, c.title FROM students s JOIN enrollments e ON s.id = e.student_id "
      "JOIN courses c ON c.id = e.course_id WHERE c.credits > {n}"}},
    {"school", "3.3", "Students older than 1{n} with their grades, if any.",
     {"SELECT s.name, e.grade FROM students s LEFT JOIN enrollments e ON s.id = e.student_id WHERE s.age > 1{n}"}},
    {"school", "3.4", "Pairs of students older than 1{n} sharing a major.",
     {"SELECT a.name, b.name FROM students a JOIN students b ON a.major = b.major WHERE a.id < b.id AND a.age > 1{n}"}},
    {"school", "3.5", "Average grade above {n} per course title.",
     {"SELECT c.title, AVG(e.grade) FROM courses c JOIN enrollments e ON e.course_id = c.id WHERE e.grade > {n} "
      "GROUP BY c.title"}},
    {"school", "3.6", "Every student older than 1{n} paired with every teacher.",
     {"SELECT s.name, t.name FROM students s CROSS JOIN teachers t WHERE s.age > 1{n}"}},
    {"school", "4.1", "Students above the average GPA of those older than 1{n}.",
     {"SELECT name FROM students WHERE gpa > (SELECT AVG(gpa) FROM students WHERE age > 1{n})"}},
    {"school", "4.2", "Students enrolled in course {n}.",
     {"SELECT name FROM students WHERE id IN (SELECT student_id FROM enrollments WHERE course_id = {n})"}},
    {"school", "4.3", "Students with an enrollment in course {n}.",
     {"SELECT name FROM students s WHERE EXISTS (SELECT 1 FROM enrollments e WHERE e.student_id = s.id "
      "AND e.course_id = {n})"}},
    {"school", "4.4", "Students whose GPA reaches that of everyone older than 1{n}.",
     {"SELECT name FROM students WHERE gpa >= ALL (SELECT gpa FROM students WHERE age > 1{n})"}},
    {"school", "4.5", "Majors with more than {n} students, from a grouped subquery.",
     {"SELECT t.major FROM (SELECT major, COUNT(*) AS cnt FROM students GROUP BY major) AS t WHERE t.cnt > {n}"}},
    {"school", "4.6", "Each student with the number of enrollments in courses after {n}.",
     {"SELECT name, (SELECT COUNT(*) FROM enrollments e WHERE e.student_id = s.id AND e.course_id > {n}) "
      "FROM students s"}},
    {"school", "5.1", "Names of students older than 1{n} and of all teachers.",
     {"SELECT name FROM students WHERE age > 1{n} UNION SELECT name FROM teachers"}},
    {"school", "5.2", "Students in course {n} who also have a grade above 2.",
     {"SELECT student_id FROM enrollments WHERE course_id = {n} INTERSECT "
      "SELECT student_id FROM enrollments WHERE grade > 2"}},
    {"school", "5.3", "Students not enrolled in any course after {n}.",
     {"SELECT id FROM students EXCEPT SELECT student_id FROM enrollments WHERE course_id > {n}"}},
    {"school", "5.4", "Label students as older or younger than 1{n}.",
     {"SELECT name, CASE WHEN age > 1{n} THEN 'older' ELSE 'younger' END FROM students"}},
    {"school", "5.5", "Students older than 1{n}, via a named subquery.",
     {"WITH older AS (SELECT name, age FROM students WHERE age > 1{n}) SELECT name FROM older"}},
    {"school", "5.6", "Students not enrolled after course {n}, via two named subqueries.",
     {"WITH a AS (SELECT id FROM students), b AS (SELECT student_id FROM enrollments WHERE course_id > {n}) "
      "SELECT id FROM a EXCEPT SELECT student_id FROM b"}},
    {"school", "6.1", "Number students older than 1{n} by GPA.",
     {"SELECT name, ROW_NUMBER() OVER (ORDER BY gpa DESC) FROM students WHERE age > 1{n}"}},
    {"school", "6.2", "Running average GPA by enrollment year for students older than 1{n}.",
     {"SELECT name, AVG(gpa) OVER (ORDER BY enrolled_year) FROM students WHERE age > 1{n}"}},
    {"school", "6.3", "Average GPA of each major next to students older than 1{n}.",
     {"SELECT name, AVG(gpa) OVER (PARTITION BY major) FROM students WHERE age > 1{n}"}},
    {"school", "6.4", "Moving average grade over the previous {n} enrollments.",
     {"SELECT id, AVG(grade) OVER (ORDER BY id ROWS BETWEEN {n} PRECEDING AND CURRENT ROW) FROM enrollments"}},
    {"school", "6.5", "Count from 1 to {n}.",
     {"WITH RECURSIVE seq(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM seq WHERE x < {n}) SELECT x FROM seq"}},
    {"school", "6.6", "Students within the top {n} GPA ranks.",
     {"SELECT name FROM (SELECT name, RANK() OVER (ORDER BY gpa DESC) AS r FROM students) t WHERE t.r <= {n}"}},
};

}  // namespace

const std::vector<TemplateEntry>& templates() { return kTemplates; }

}  // namespace sqleval::gateway::detail
