// Serves the scripted completion endpoint until interrupted.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "entroute/errors.hpp"
#include "entroute/mock_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Deterministic OpenAI-compatible completion endpoint", "entroute-mock"};
  std::string script_path;
  std::string host = "127.0.0.1";
  int port = 8000;
  app.add_option("--script", script_path, "mock script JSON")->check(CLI::ExistingFile);
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "bind port");
  CLI11_PARSE(app, argc, argv);

  try {
    entroute::MockScript script;
    if (!script_path.empty()) script = entroute::MockScript::load(script_path);
    entroute::MockServer server(std::move(script));
    std::cout << "serving on http://" << host << ':' << port << std::endl;
    server.listen_blocking(host, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
