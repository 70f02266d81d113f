#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dopc {

// Pipeline stage an error is attributed to. Maps to CLI exit codes.
enum class Stage { Parse, Compile, Lower, DataView, Solve, Run, Usage };

const char* stage_name(Stage s);
int stage_exit_code(Stage s);

struct Diag {
    int line = 0;  // 1-based; 0 = no position
    int col = 0;
    std::string message;

    std::string to_string() const;
};

// Thrown by any stage; carries one or more diagnostics.
class Error : public std::runtime_error {
  public:
    Error(Stage stage, std::string message, int line = 0, int col = 0);
    Error(Stage stage, std::vector<Diag> diags);

    Stage stage() const { return stage_; }
    const std::vector<Diag>& diags() const { return diags_; }

  private:
    static std::string render(Stage stage, const std::vector<Diag>& diags);
    Stage stage_;
    std::vector<Diag> diags_;
};

}  // namespace dopc
