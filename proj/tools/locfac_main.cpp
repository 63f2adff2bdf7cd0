// locfac: local constants of supercuspidal representations of GL_l over
// p-adic fields -- Gauss sums, lambda factors, Tate and GL_l epsilon
// factors, tame base change, and epsilon factors of pairs, in exact
// cyclotomic arithmetic.
//
// Exit codes: 0 success, 2 specification error, 3 precision/guard error,
// 4 selfcheck failure.

#include "locfac/jobspec.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace locfac;

namespace {

int cmd_run(const std::string& spec_path, const std::string& out_path, int workers) {
    Json j;
    {
        std::ifstream in(spec_path);
        if (!in) {
            std::cerr << "cannot open spec: " << spec_path << "\n";
            return 2;
        }
        try {
            in >> j;
        } catch (const std::exception& e) {
            std::cerr << "bad JSON: " << e.what() << "\n";
            return 2;
        }
    }
    JobSpec spec;
    try {
        spec = parse_jobspec(j);
    } catch (const precision_error& e) {
        std::cerr << "precision error: " << e.what() << "\n";
        return 3;
    } catch (const guard_error& e) {
        std::cerr << "guard error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return 2;
    }
    RunReport rep = run_jobspec(spec, workers);
    std::string text = rep.json.dump(2) + "\n";
    std::string dest = out_path.empty() ? j.value("output", std::string()) : out_path;
    if (dest.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(dest, std::ios::binary);
        out << text;
    }
    return rep.json["exit_code"].get<int>();
}

int cmd_selfcheck(const std::string& profile) {
    SelfcheckReport rep;
    try {
        rep = run_selfcheck(profile_from_string(profile));
    } catch (const std::exception& e) {
        std::cerr << "selfcheck error: " << e.what() << "\n";
        return 4;
    }
    std::cout << format_report(rep);
    return rep.all_pass && coverage_complete(rep) ? 0 : 4;
}

int cmd_print_generators(const std::string& spec_path, const std::string& field, long n) {
    Json j;
    std::ifstream in(spec_path);
    if (!in) {
        std::cerr << "cannot open spec: " << spec_path << "\n";
        return 2;
    }
    try {
        in >> j;
        JobSpec spec = parse_jobspec(j);
        auto it = spec.fields.find(field);
        if (it == spec.fields.end()) throw spec_error("unresolved-ref: field '" + field + "'");
        std::cout << generators_json(it->second, n, spec.guard).dump(2) << "\n";
        return 0;
    } catch (const precision_error& e) {
        std::cerr << "precision error: " << e.what() << "\n";
        return 3;
    } catch (const guard_error& e) {
        std::cerr << "guard error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"locfac: exact local constants for GL_l over p-adic fields"};
    app.require_subcommand(1);

    std::string spec_path, out_path, profile = "small", field;
    int workers = 1;
    long level = 1;

    auto* run = app.add_subcommand("run", "execute a job specification");
    run->add_option("spec", spec_path, "job spec (JSON)")->required();
    run->add_option("--out", out_path, "write the report here (default: stdout)");
    run->add_option("--workers", workers, "parallel task workers");

    auto* sc = app.add_subcommand("selfcheck", "run the consistency suite");
    sc->add_option("--profile", profile, "small | full")->check(CLI::IsMember({"small", "full", "acceptance"}));

    auto* pg = app.add_subcommand("print-generators", "print the unit-group generators of a declared field");
    pg->add_option("spec", spec_path, "job spec (JSON)")->required();
    pg->add_option("field", field, "field name")->required();
    pg->add_option("n", level, "unit-group level")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(spec_path, out_path, workers);
    if (sc->parsed()) return cmd_selfcheck(profile);
    if (pg->parsed()) return cmd_print_generators(spec_path, field, level);
    return 2;
}
