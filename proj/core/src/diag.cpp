#include "dopc/diag.hpp"

namespace dopc {

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Parse: return "parse";
        case Stage::Compile: return "compile";
        case Stage::Lower: return "lower";
        case Stage::DataView: return "data-view";
        case Stage::Solve: return "solve";
        case Stage::Run: return "run";
        case Stage::Usage: return "usage";
    }
    return "?";
}

int stage_exit_code(Stage s) {
    switch (s) {
        case Stage::Usage: return 2;
        case Stage::Parse:
        case Stage::Compile:
        case Stage::Lower:
        case Stage::DataView: return 3;
        case Stage::Solve: return 4;
        case Stage::Run: return 5;
    }
    return 1;
}

std::string Diag::to_string() const {
    std::string s;
    if (line > 0) {
        s += std::to_string(line);
        if (col > 0) s += ":" + std::to_string(col);
        s += ": ";
    }
    return s + message;
}

Error::Error(Stage stage, std::string message, int line, int col)
    : Error(stage, std::vector<Diag>{Diag{line, col, std::move(message)}}) {}

Error::Error(Stage stage, std::vector<Diag> diags)
    : std::runtime_error(render(stage, diags)), stage_(stage), diags_(std::move(diags)) {}

std::string Error::render(Stage stage, const std::vector<Diag>& diags) {
    std::string s = std::string(stage_name(stage)) + " error";
    for (const auto& d : diags) s += "\n  " + d.to_string();
    return s;
}

}  // namespace dopc
