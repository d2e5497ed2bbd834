#ifndef SMSR_ERRORS_HPP
#define SMSR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace smsr {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/* Malformed input file; line() is 1-based, 0 when not tied to a line */
class ParseError : public Error
{
public:
    ParseError(const std::string& path, int line, const std::string& what)
        : Error(path + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                ": " + what),
          mLine(line) {}

    int line() const { return mLine; }

private:
    int mLine;
};

/* Numerical solver gave up (divergence); the CLI maps this to exit code 2 */
class SolverAbort : public Error
{
public:
    using Error::Error;
};

/* Failure inside one pipeline stage, tagged with the stage name */
class StageError : public Error
{
public:
    StageError(std::string stage, const std::string& what, bool solverAbort = false)
        : Error("[" + stage + "] " + what),
          mStage(std::move(stage)), mSolverAbort(solverAbort) {}

    const std::string& stage() const { return mStage; }
    bool solverAbort() const { return mSolverAbort; }

private:
    std::string mStage;
    bool mSolverAbort;
};

} // namespace smsr

#endif // SMSR_ERRORS_HPP
