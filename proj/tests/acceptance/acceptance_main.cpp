// populated after unit suites pass
int main() { return 1; }
