#include "cli.hpp"

#include <iostream>

#include "common.hpp"
#include "docparse/errors.hpp"

namespace docparse::cli {

int run(int argc, char** argv) {
  CLI::App app{"Coordinate-token losses, LaTeX normalization and document-parsing metrics"};
  app.name("docparse");
  app.require_subcommand(1);
  int exit_code = kExitOk;
  add_gradcheck(app, exit_code);
  add_train_toy(app, exit_code);
  add_normalize(app, exit_code);
  add_eval_text(app, exit_code);
  add_eval_detect(app, exit_code);
  add_csr(app, exit_code);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "docparse: configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ProtocolError& e) {
    std::cerr << "docparse: protocol error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "docparse: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "docparse: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return exit_code;
}

}  // namespace docparse::cli
