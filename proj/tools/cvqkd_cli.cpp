// placeholder while the library core is calibrated
int main() { return 0; }
