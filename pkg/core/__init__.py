# Инициализационный файл для модуля core